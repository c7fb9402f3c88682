//! Whole-pipeline runs over the scripted screencast fixture.

use std::path::Path;

use psc2code_core::classify::{Backend, FrameVerdict};
use psc2code_core::codelm::build_model;
use psc2code_core::config::{OcrBackendKind, PipelineConfig};
use psc2code_core::eval::iou;
use psc2code_core::keyframes::InformativeSet;
use psc2code_core::layout::{Rect, Regions};
use psc2code_core::pipeline::{run_pipeline, run_video, Stage, StageStatus, VideoSource};
use psc2code_core::workflow::{Action, Workflow};
use psc2code_core::workspace::{self, Workspace};
use psc2code_testkit::screencast::{write_screencast, ScreencastFixture};

fn setup(dir: &Path) -> (ScreencastFixture, PipelineConfig, Workspace) {
    let fx = write_screencast(&dir.join("fixture"), 11).unwrap();
    let model_path = dir.join("model.json");
    build_model(&fx.corpus_dir).unwrap().save(&model_path).unwrap();
    let mut cfg = PipelineConfig {
        workspace: dir.join("ws"),
        model: Some(model_path),
        ..Default::default()
    };
    cfg.classifier.backend = Backend::Fixture;
    cfg.classifier.labels = Some(fx.labels.clone());
    cfg.ocr.backend = OcrBackendKind::Fixture;
    cfg.ocr.fixture_dir = Some(fx.ocr_dir.clone());
    let ws = Workspace::open(&cfg.workspace).unwrap();
    (fx, cfg, ws)
}

fn source(fx: &ScreencastFixture) -> VideoSource {
    VideoSource {
        video_id: "calc".into(),
        path: fx.frames_dir.clone(),
    }
}

#[test]
fn fixture_video_produces_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let (fx, cfg, ws) = setup(dir.path());
    let out = run_pipeline(&ws, &[source(&fx)], &cfg);
    let summary = out[0].result.as_ref().unwrap();
    assert_eq!(summary.frames, fx.truth.len());

    for rel in [
        workspace::MANIFEST,
        workspace::INFORMATIVE,
        workspace::CLASSIFIED,
        workspace::REGIONS,
        workspace::CORRECTION_REPORT,
        workspace::DOCUMENT,
        workspace::WORKFLOW,
        workspace::CONFIG_STAMP,
    ] {
        assert!(ws.exists("calc", rel), "missing {rel}");
    }
    assert_eq!(ws.timed_files("calc", workspace::FRAMES_DIR, "png").unwrap().len(), fx.truth.len());

    // repeated seconds are dropped, the three slide frames collapse to one
    let informative: InformativeSet = ws.read_json("calc", workspace::INFORMATIVE).unwrap();
    assert_eq!(informative.kept[0], 0);
    assert!(informative.dropped.contains(&(1, 0)) && informative.dropped.contains(&(2, 0)));

    let verdicts: Vec<FrameVerdict> = ws.read_json("calc", workspace::CLASSIFIED).unwrap();
    assert_eq!(verdicts.len(), informative.kept.len());
    for v in &verdicts {
        assert_eq!(v.valid, fx.truth[v.t as usize].valid, "t={}", v.t);
    }

    let regions: Regions = ws.read_json("calc", workspace::REGIONS).unwrap();
    for v in verdicts.iter().filter(|v| v.valid) {
        let truth = fx.truth[v.t as usize].editor.unwrap();
        let got = regions.code_region(v.t).expect("code region");
        assert!(iou(got, Rect::new(truth.0, truth.1, truth.2, truth.3)) >= 0.9, "t={} {got:?}", v.t);
    }

    // corrected code matches what was on screen
    let code = ws.timed_files("calc", workspace::CODE_DIR, "txt").unwrap();
    assert_eq!(code.len(), summary.ocr_frames);
    let mut exact = 0;
    for (t, path) in &code {
        let text = std::fs::read_to_string(path).unwrap();
        let want = fx.truth[*t as usize].code.join("\n") + "\n";
        if text == want {
            exact += 1;
        }
    }
    assert!(exact * 10 >= code.len() * 9, "{exact}/{} frames exact", code.len());

    let wf: Workflow = ws.read_json("calc", workspace::WORKFLOW).unwrap();
    let mut names: Vec<&str> = wf.files.iter().map(|f| f.name.as_str()).collect();
    names.sort();
    assert_eq!(names, ["Calculator", "Main"]);
    let switches = wf
        .timeline
        .iter()
        .filter(|a| matches!(a.action, Action::Switch { .. }))
        .count();
    assert_eq!(switches, 2);
}

#[test]
fn warm_rerun_reuses_everything() {
    let dir = tempfile::tempdir().unwrap();
    let (fx, cfg, ws) = setup(dir.path());
    let model = psc2code_core::codelm::CodeLanguageModel::load(cfg.model.as_ref().unwrap()).unwrap();
    run_video(&ws, &source(&fx), &cfg, Some(&model)).unwrap();
    let again = run_video(&ws, &source(&fx), &cfg, Some(&model)).unwrap();
    assert!(again.stages.iter().all(|s| s.status == StageStatus::Cached), "{:?}", again.stages);
    assert_eq!(again.ocr_computed, 0);
}

#[test]
fn deleting_workflow_recomputes_only_workflow() {
    let dir = tempfile::tempdir().unwrap();
    let (fx, cfg, ws) = setup(dir.path());
    let model = psc2code_core::codelm::CodeLanguageModel::load(cfg.model.as_ref().unwrap()).unwrap();
    run_video(&ws, &source(&fx), &cfg, Some(&model)).unwrap();
    let ocr_before: Vec<_> = ws
        .timed_files("calc", workspace::OCR_DIR, "json")
        .unwrap()
        .into_iter()
        .map(|(t, p)| (t, std::fs::metadata(p).unwrap().modified().unwrap()))
        .collect();
    ws.remove("calc", workspace::WORKFLOW).unwrap();
    let again = run_video(&ws, &source(&fx), &cfg, Some(&model)).unwrap();
    assert_eq!(again.status(Stage::Workflow), Some(StageStatus::Computed));
    for stage in [Stage::Ingest, Stage::Keyframes, Stage::Classify, Stage::Layout, Stage::Ocr, Stage::Correct] {
        assert_eq!(again.status(stage), Some(StageStatus::Cached), "{stage:?}");
    }
    let ocr_after: Vec<_> = ws
        .timed_files("calc", workspace::OCR_DIR, "json")
        .unwrap()
        .into_iter()
        .map(|(t, p)| (t, std::fs::metadata(p).unwrap().modified().unwrap()))
        .collect();
    assert_eq!(ocr_before, ocr_after);
    assert!(ws.exists("calc", workspace::WORKFLOW));
}

#[test]
fn changed_correction_settings_keep_ocr() {
    let dir = tempfile::tempdir().unwrap();
    let (fx, mut cfg, ws) = setup(dir.path());
    let model = psc2code_core::codelm::CodeLanguageModel::load(cfg.model.as_ref().unwrap()).unwrap();
    run_video(&ws, &source(&fx), &cfg, Some(&model)).unwrap();
    cfg.correction.accept_ratio = 0.2;
    let again = run_video(&ws, &source(&fx), &cfg, Some(&model)).unwrap();
    assert_eq!(again.status(Stage::Ocr), Some(StageStatus::Cached));
    assert_eq!(again.status(Stage::Correct), Some(StageStatus::Computed));
    assert_eq!(again.status(Stage::Workflow), Some(StageStatus::Computed));
    let stamped = PipelineConfig::from_toml(&ws.read_text("calc", workspace::CONFIG_STAMP).unwrap()).unwrap();
    assert_eq!(stamped, cfg);
}

#[test]
fn heuristic_backend_agrees_with_labels() {
    let dir = tempfile::tempdir().unwrap();
    let (fx, mut cfg, ws) = setup(dir.path());
    cfg.classifier.backend = Backend::Heuristic;
    cfg.classifier.labels = None;
    run_pipeline(&ws, &[source(&fx)], &cfg)[0].result.as_ref().unwrap();
    let verdicts: Vec<FrameVerdict> = ws.read_json("calc", workspace::CLASSIFIED).unwrap();
    for v in &verdicts {
        assert_eq!(v.valid, fx.truth[v.t as usize].valid, "t={}", v.t);
        assert_eq!(v.backend, Backend::Heuristic);
    }
}

#[test]
fn missing_model_fails_only_that_run() {
    let dir = tempfile::tempdir().unwrap();
    let (fx, mut cfg, ws) = setup(dir.path());
    cfg.model = None;
    let bogus = psc2code_core::pipeline::VideoSource {
        video_id: "ghost".into(),
        path: dir.path().join("nope"),
    };
    let out = run_pipeline(&ws, &[bogus, source(&fx)], &cfg);
    assert!(out[0].result.is_err());
    let err = out[1].result.as_ref().unwrap_err().to_string();
    assert!(err.contains("build-model"), "{err}");
    // stages before correction were still persisted
    assert!(ws.exists("calc", workspace::REGIONS));
    let _ = workspace::read_json_file::<Regions>(&ws.path("calc", workspace::REGIONS)).unwrap();
}
