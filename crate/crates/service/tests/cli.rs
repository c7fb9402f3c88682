//! The `psc2code` binary end to end on the scripted screencast.

use std::path::Path;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use psc2code_testkit::screencast::write_screencast;

fn psc2code(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_psc2code"))
        .args(args)
        .current_dir(cwd)
        .env("RUST_LOG", "warn")
        .env_remove("PSC2CODE_DECODER")
        .output()
        .unwrap()
}

fn ok(out: &Output) -> String {
    let stdout = String::from_utf8_lossy(&out.stdout).into_owned();
    assert!(
        out.status.success(),
        "stdout: {stdout}\nstderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    stdout
}

fn write_config(dir: &Path) -> std::path::PathBuf {
    let fx = dir.join("fixture");
    let cfg = format!(
        r#"
workspace = "{ws}"
model = "{model}"

[classifier]
backend = "fixture"
labels = "{labels}"

[ocr]
backend = "fixture"
fixture_dir = "{ocr}"
"#,
        ws = dir.join("ws").display(),
        model = dir.join("model.json").display(),
        labels = fx.join("labels.json").display(),
        ocr = fx.join("ocr").display(),
    );
    let path = dir.join("psc2code.toml");
    std::fs::write(&path, cfg).unwrap();
    path
}

#[test]
fn process_index_search_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let fx = write_screencast(&d.join("fixture"), 2).unwrap();
    let corpus = fx.corpus_dir.to_str().unwrap();
    let out = ok(&psc2code(&["build-model", "--corpus", corpus, "--out", "model.json"], d));
    assert!(out.contains("line structures"), "{out}");

    let config = write_config(d);
    let config = config.to_str().unwrap();
    let frames = d.join("calc");
    std::fs::rename(&fx.frames_dir, &frames).unwrap();
    let started = Instant::now();
    let out = ok(&psc2code(&["process", "--config", config, frames.to_str().unwrap()], d));
    let cold = started.elapsed();
    assert!(out.starts_with("calc:"), "{out}");
    assert!(cold < Duration::from_secs(60), "{cold:?}");

    let started = Instant::now();
    let out = ok(&psc2code(&["process", "--config", config, frames.to_str().unwrap()], d));
    assert!(started.elapsed() < Duration::from_secs(5));
    assert_eq!(out.matches("cached").count(), 7, "{out}");

    let out = ok(&psc2code(&["index", "--config", config], d));
    assert!(out.starts_with("indexed 1 videos"), "{out}");
    assert!(d.join("ws/index.json").is_file());

    let out = ok(&psc2code(&["search", "--config", config, "--query", "average total"], d));
    assert!(out.contains("1. calc"), "{out}");
    assert!(out.contains("[all keywords in one frame]"), "{out}");
    let out = ok(&psc2code(&["search", "--config", config, "-q", "JFrame", "--json"], d));
    assert_eq!(out.trim(), "[]");
}

#[test]
fn failed_video_sets_exit_status() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = psc2code(
        &["process", "--workspace", "ws", "--classifier", "heuristic", "missing.mp4", "--decoder", "/nonexistent/decoder"],
        d,
    );
    assert!(!out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("missing: failed"), "{stdout}");
    assert!(String::from_utf8_lossy(&out.stderr).contains("1 of 1 videos failed"));
}

#[test]
fn bad_flags_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = psc2code(&["process", "--classifier", "cnn", "x"], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown classifier backend"));
    // the external backend needs somewhere to send frames
    let out = psc2code(&["process", "--classifier", "external", "x"], dir.path());
    assert!(!out.status.success());
    let out = psc2code(&["serve", "--workspace", "nowhere"], dir.path());
    assert!(String::from_utf8_lossy(&out.stderr).contains("does not exist"));
}

#[test]
fn eval_reproduces_published_tables() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("cm.json"), r#"{"tp":2459,"fp":256,"fn":445,"tn":1668}"#).unwrap();
    let out = ok(&psc2code(&["eval", "classifier", "--matrix", "cm.json"], d));
    assert!(out.contains("accuracy      0.8548"), "{out}");
    let out = ok(&psc2code(&["eval", "classifier", "--matrix", "cm.json", "--json"], d));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!((v["f1_v"].as_f64().unwrap() * 100.0).round(), 88.0);

    std::fs::write(
        d.join("counts.json"),
        r#"{"all_incorrect":1357,"corrected":715,"truly_corrected":628}"#,
    )
    .unwrap();
    let out = ok(&psc2code(&["eval", "correction", "--counts", "counts.json"], d));
    assert!(out.contains("accuracy1 0.4628") && out.contains("accuracy2 0.8783"), "{out}");

    std::fs::write(
        d.join("judgments.json"),
        r#"{"thread sleep": {"relevance": [1, 0, 1, 0, 0], "total_relevant": 2},
            "jframe": {"relevance": [0, 1], "total_relevant": 1}}"#,
    )
    .unwrap();
    let out = ok(&psc2code(&["eval", "retrieval", "--judgments", "judgments.json", "-k", "5", "--json"], d));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let m = &v[0];
    assert!((m["mean_precision"].as_f64().unwrap() - 0.3).abs() < 1e-9);
    assert!((m["map"].as_f64().unwrap() - ((1.0 + 2.0 / 3.0) / 2.0 + 0.5) / 2.0).abs() < 1e-9);
    assert!((m["mrr"].as_f64().unwrap() - 0.75).abs() < 1e-9);

    std::fs::write(d.join("partial.json"), r#"{"q": {"relevance": [1]}}"#).unwrap();
    let out = psc2code(&["eval", "retrieval", "--judgments", "partial.json"], d);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("total_relevant"));
}
