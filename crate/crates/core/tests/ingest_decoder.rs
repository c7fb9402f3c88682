//! Video sources go through an external decoder; a shell stub stands in for
//! ffmpeg and writes one image per second of a 373 s video.

#![cfg(unix)]

use std::os::unix::fs::PermissionsExt;
use std::path::{Path, PathBuf};

use image::{Rgb, RgbImage};
use psc2code_core::config::PipelineConfig;
use psc2code_core::ingest::{sample_frames, Decoder, FrameOrigin, IngestError, VideoManifest};
use psc2code_core::pipeline::{run_video, VideoSource};
use psc2code_core::workspace::{self, Workspace};

/// Writes `frames` copies of a template image to the decoder's output
/// pattern and records the arguments it was called with.
fn stub(dir: &Path, frames: u32) -> PathBuf {
    let template = dir.join("template.png");
    RgbImage::from_pixel(32, 18, Rgb([200, 200, 200])).save(&template).unwrap();
    let script = dir.join("fake-ffmpeg");
    std::fs::write(
        &script,
        format!(
            r#"#!/bin/sh
printf '%s\n' "$@" > "{args}"
for last; do :; done
out=$(dirname "$last")
i=0
while [ $i -lt {frames} ]; do
  cp "{template}" "$out/$i.png"
  i=$((i + 1))
done
"#,
            args = dir.join("args.txt").display(),
            template = template.display(),
        ),
    )
    .unwrap();
    std::fs::set_permissions(&script, std::fs::Permissions::from_mode(0o755)).unwrap();
    script
}

fn video(dir: &Path) -> PathBuf {
    let v = dir.join("lecture.mp4");
    std::fs::write(&v, b"container bytes").unwrap();
    v
}

#[test]
fn one_frame_per_second() {
    let dir = tempfile::tempdir().unwrap();
    let decoder = Decoder::new(stub(dir.path(), 373).to_str().unwrap());
    let manifest = VideoManifest {
        video_id: "lecture".into(),
        source: video(dir.path()),
        duration_s: 373,
        resolution: (32, 18),
        title: String::new(),
    };
    let frames = sample_frames(&manifest, &decoder).unwrap();
    assert_eq!(frames.len(), 373);
    assert!(frames.iter().enumerate().all(|(i, f)| f.t == i as u32));
    assert!(frames.iter().all(|f| f.origin == FrameOrigin::Decoded));

    let args = std::fs::read_to_string(dir.path().join("args.txt")).unwrap();
    assert!(args.contains("gt(floor(t),floor(prev_selected_t))"), "{args}");
    assert!(args.lines().any(|l| l == "vfr"), "{args}");
}

#[test]
fn partial_last_second_is_trimmed() {
    let dir = tempfile::tempdir().unwrap();
    let decoder = Decoder::new(stub(dir.path(), 374).to_str().unwrap());
    let manifest = VideoManifest {
        video_id: "lecture".into(),
        source: video(dir.path()),
        duration_s: 373,
        resolution: (32, 18),
        title: String::new(),
    };
    let frames = sample_frames(&manifest, &decoder).unwrap();
    assert_eq!(frames.last().unwrap().t, 372);
}

#[test]
fn pipeline_ingests_video_files_through_the_decoder() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = PipelineConfig {
        workspace: dir.path().join("ws"),
        decoder: Some(stub(dir.path(), 373).to_str().unwrap().into()),
        ..Default::default()
    };
    let ws = Workspace::open(&cfg.workspace).unwrap();
    let src = VideoSource::from_path(video(dir.path()));
    // no model configured: correction fails, but earlier stages persist
    let err = run_video(&ws, &src, &cfg, None).unwrap_err();
    assert!(err.to_string().contains("build-model"), "{err}");
    let m: VideoManifest = ws.read_json("lecture", workspace::MANIFEST).unwrap();
    assert_eq!((m.duration_s, m.resolution), (373, (32, 18)));
    assert_eq!(ws.timed_files("lecture", workspace::FRAMES_DIR, "png").unwrap().len(), 373);
    let informative: psc2code_core::keyframes::InformativeSet = ws.read_json("lecture", workspace::INFORMATIVE).unwrap();
    // identical images collapse onto the first
    assert_eq!(informative.kept, [0]);
}

#[test]
fn missing_decoder_fails_the_video() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = VideoManifest {
        video_id: "lecture".into(),
        source: video(dir.path()),
        duration_s: 10,
        resolution: (32, 18),
        title: String::new(),
    };
    let err = sample_frames(&manifest, &Decoder::new(dir.path().join("nope").to_str().unwrap())).unwrap_err();
    assert!(matches!(err, IngestError::DecoderUnavailable(_)), "{err}");
}
