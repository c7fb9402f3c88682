//! HTTP API over a workspace produced by the real pipeline.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use serde_json::Value;
use tower::ServiceExt;

use psc2code_core::classify::Backend;
use psc2code_core::codelm::build_model;
use psc2code_core::config::OcrBackendKind;
use psc2code_core::pipeline::{run_pipeline, VideoSource};
use psc2code_core::{PipelineConfig, Workspace};
use psc2code_service::api::{router, AppState, RouterOptions};
use psc2code_service::snapshot::WorkspaceSnapshot;
use psc2code_testkit::screencast::write_screencast;

struct Fixture {
    _dir: tempfile::TempDir,
    fixture: PathBuf,
    cfg: PipelineConfig,
}

/// Two videos built from the same scripted screencast.
fn processed() -> &'static Fixture {
    static FX: OnceLock<Fixture> = OnceLock::new();
    FX.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let fx = write_screencast(&dir.path().join("fixture"), 5).unwrap();
        let model = dir.path().join("model.json");
        build_model(&fx.corpus_dir).unwrap().save(&model).unwrap();
        let mut cfg = PipelineConfig {
            workspace: dir.path().join("ws"),
            model: Some(model),
            ..Default::default()
        };
        cfg.classifier.backend = Backend::Fixture;
        cfg.classifier.labels = Some(fx.labels.clone());
        cfg.ocr.backend = OcrBackendKind::Fixture;
        cfg.ocr.fixture_dir = Some(fx.ocr_dir.clone());
        let ws = Workspace::open(&cfg.workspace).unwrap();
        let sources: Vec<VideoSource> = ["calc", "calc2"]
            .iter()
            .map(|id| VideoSource {
                video_id: id.to_string(),
                path: fx.frames_dir.clone(),
            })
            .collect();
        for o in run_pipeline(&ws, &sources, &cfg) {
            o.result.unwrap();
        }
        Fixture {
            fixture: dir.path().join("fixture"),
            _dir: dir,
            cfg,
        }
    })
}

fn app(root: &Path, reload: bool, app_dir: Option<&Path>) -> Router {
    let state = AppState::new(WorkspaceSnapshot::load(root).unwrap());
    router(state, RouterOptions { app_dir, reload })
}

async fn call(app: &Router, method: Method, uri: &str) -> (StatusCode, Vec<u8>) {
    let res = app
        .clone()
        .oneshot(Request::builder().method(method).uri(uri).body(Body::empty()).unwrap())
        .await
        .unwrap();
    let status = res.status();
    let body = axum::body::to_bytes(res.into_body(), usize::MAX).await.unwrap();
    (status, body.to_vec())
}

async fn get(app: &Router, uri: &str) -> (StatusCode, Value) {
    let (status, body) = call(app, Method::GET, uri).await;
    (status, serde_json::from_slice(&body).unwrap_or(Value::Null))
}

fn code_text(root: &Path, id: &str, t: u64) -> String {
    std::fs::read_to_string(root.join(id).join("code").join(format!("{t}.txt"))).unwrap()
}

#[tokio::test]
async fn lists_every_video() {
    let fx = processed();
    let app = app(&fx.cfg.workspace, false, None);
    let (status, body) = get(&app, "/videos").await;
    assert_eq!(status, StatusCode::OK);
    let ids: Vec<&str> = body.as_array().unwrap().iter().map(|m| m["video_id"].as_str().unwrap()).collect();
    assert_eq!(ids, ["calc", "calc2"]);
}

#[tokio::test]
async fn video_search_matches_frame_text_case_insensitively() {
    let fx = processed();
    let root = &fx.cfg.workspace;
    let app = app(root, false, None);
    let (status, body) = get(&app, "/videos/calc/search?q=AVERAGE").await;
    assert_eq!(status, StatusCode::OK);
    let frames: Vec<u64> = body["frames"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).collect();
    assert!(!frames.is_empty());
    let all: Vec<u64> = std::fs::read_dir(root.join("calc/code"))
        .unwrap()
        .map(|e| e.unwrap().path().file_stem().unwrap().to_str().unwrap().parse().unwrap())
        .collect();
    for t in all {
        let has = code_text(root, "calc", t).to_lowercase().contains("average");
        assert_eq!(frames.contains(&t), has, "t={t}");
    }
}

#[tokio::test]
async fn artifacts_mirror_the_persisted_files() {
    let fx = processed();
    let root = &fx.cfg.workspace;
    let app = app(root, false, None);

    let (_, frames) = get(&app, "/videos/calc/frames").await;
    let classified: Value = serde_json::from_slice(&std::fs::read(root.join("calc/classified.json")).unwrap()).unwrap();
    assert_eq!(frames["verdicts"], classified);
    assert!(frames["informative"]["kept"].as_array().unwrap().len() > 10);

    let workflow: Value = serde_json::from_slice(&std::fs::read(root.join("calc/workflow.json")).unwrap()).unwrap();
    let (_, files) = get(&app, "/videos/calc/files").await;
    assert_eq!(files, workflow["files"]);
    let mut names: Vec<&str> = files.as_array().unwrap().iter().map(|f| f["name"].as_str().unwrap()).collect();
    names.sort();
    assert_eq!(names, ["Calculator", "Main"]);
    let (_, timeline) = get(&app, "/videos/calc/timeline").await;
    assert_eq!(timeline, workflow["timeline"]);

    let t = frames["verdicts"]
        .as_array()
        .unwrap()
        .iter()
        .find(|v| v["valid"] == Value::Bool(true))
        .unwrap()["t"]
        .as_u64()
        .unwrap();
    let (status, snap) = get(&app, &format!("/videos/calc/code/{t}")).await;
    assert_eq!(status, StatusCode::OK);
    let lines: Vec<&str> = snap["lines"].as_array().unwrap().iter().map(|l| l.as_str().unwrap()).collect();
    assert_eq!(lines.join("\n") + "\n", code_text(root, "calc", t));
}

#[tokio::test]
async fn corpus_search_ranks_videos() {
    let fx = processed();
    let app = app(&fx.cfg.workspace, false, None);
    let (status, hits) = get(&app, "/search?q=Calculator%20average&k=1").await;
    assert_eq!(status, StatusCode::OK);
    let hits = hits.as_array().unwrap();
    assert_eq!(hits.len(), 1);
    assert!(hits[0]["score"].as_f64().unwrap() > 0.0);
    assert_eq!(hits[0]["all_in_one_frame"], Value::Bool(true));
    let (_, none) = get(&app, "/search?q=JFrame").await;
    assert_eq!(none, Value::Array(vec![]));
}

#[tokio::test]
async fn errors_map_to_status_codes() {
    let fx = processed();
    let app = app(&fx.cfg.workspace, false, None);
    for uri in [
        "/videos/unknown/timeline",
        "/videos/unknown/files",
        "/videos/unknown/frames",
        "/videos/unknown/search?q=x",
        "/videos/calc/code/99999",
    ] {
        assert_eq!(get(&app, uri).await.0, StatusCode::NOT_FOUND, "{uri}");
    }
    for uri in [
        "/videos/calc/search",
        "/videos/calc/search?q=%20",
        "/videos/calc/search?q=%3B%3B",
        "/search?q=",
        "/search?q=total&k=0",
        "/search?q=total&k=many",
        "/videos/calc/code/abc",
    ] {
        assert_eq!(get(&app, uri).await.0, StatusCode::BAD_REQUEST, "{uri}");
    }
    // reload is off unless asked for
    assert_ne!(call(&app, Method::POST, "/reload").await.0, StatusCode::OK);
}

fn tree(root: &Path) -> BTreeMap<PathBuf, (Vec<u8>, std::time::SystemTime)> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in std::fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let meta = std::fs::metadata(&p).unwrap();
                out.insert(p.clone(), (std::fs::read(&p).unwrap(), meta.modified().unwrap()));
            }
        }
    }
    out
}

#[tokio::test]
async fn requests_never_touch_the_workspace() {
    let fx = processed();
    let root = &fx.cfg.workspace;
    let before = tree(root);
    let app = app(root, false, None);
    for uri in [
        "/videos",
        "/videos/calc/frames",
        "/videos/calc/files",
        "/videos/calc/timeline",
        "/videos/calc/search?q=total",
        "/videos/calc/code/5",
        "/search?q=count",
        "/videos/nope/files",
        "/search?q=",
    ] {
        get(&app, uri).await;
    }
    assert_eq!(tree(root), before);
}

#[tokio::test]
async fn reload_picks_up_new_videos_and_app_assets_are_served() {
    let fx = processed();
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = fx.cfg.clone();
    cfg.workspace = dir.path().join("ws");
    let ws = Workspace::open(&cfg.workspace).unwrap();
    let frames = fx.fixture.join("frames");
    let src = |id: &str| VideoSource {
        video_id: id.into(),
        path: frames.clone(),
    };
    run_pipeline(&ws, &[src("first")], &cfg)[0].result.as_ref().unwrap();

    let assets = dir.path().join("app");
    std::fs::create_dir_all(&assets).unwrap();
    std::fs::write(assets.join("index.html"), "<html>player</html>").unwrap();
    let app = app(&cfg.workspace, true, Some(&assets));
    let (status, body) = call(&app, Method::GET, "/app/index.html").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, b"<html>player</html>");

    run_pipeline(&ws, &[src("second")], &cfg)[0].result.as_ref().unwrap();
    assert_eq!(get(&app, "/videos").await.1.as_array().unwrap().len(), 1);
    let (status, body) = call(&app, Method::POST, "/reload").await;
    assert_eq!(status, StatusCode::OK, "{}", String::from_utf8_lossy(&body));
    assert_eq!(get(&app, "/videos").await.1.as_array().unwrap().len(), 2);
    assert_eq!(get(&app, "/videos/second/timeline").await.0, StatusCode::OK);
}
