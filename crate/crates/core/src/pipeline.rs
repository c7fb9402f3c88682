//! End-to-end processing of one or more videos into the workspace.
//!
//! Stages run in order and persist their artifact before the next starts. A
//! stage is skipped when its artifact exists, everything upstream was reused,
//! and its section of the stamped `config.toml` is unchanged. OCR is cached
//! per frame, so a changed correction setting never re-runs OCR.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{classify_frames, Backend, ClassifyError, FrameVerdict};
use crate::codelm::{CodeLanguageModel, ModelError};
use crate::config::{OcrBackendKind, PipelineConfig};
use crate::correct::{correct_video, CorrectionReport};
use crate::ingest::{list_frame_files, Decoder, Frame, FrameOrigin, IngestError, VideoManifest};
use crate::keyframes::{AnchorScan, InformativeSet, KeyframeError};
use crate::layout::{cluster_layouts, detect_segments, FrameLines, Regions};
use crate::ocr::{ocr_region, reconstruct_lines, CodeSnapshot, FixtureOcr, LocalOcr, OcrBackend, OcrError, OcrPage, RemoteOcr};
use crate::workflow::reconstruct_workflow;
use crate::workspace::{
    Workspace, WorkspaceError, CLASSIFIED, CODE_DIR, CONFIG_STAMP, CORRECTION_REPORT, DOCUMENT, FRAMES_DIR,
    INFORMATIVE, MANIFEST, OCR_DIR, REGIONS, WORKFLOW,
};

/// Frames held in memory at once while classifying.
const CLASSIFY_CHUNK: usize = 32;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Keyframes(#[from] KeyframeError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error("OCR of frame t={t}: {source}")]
    Ocr { t: u32, source: OcrError },
    #[error("OCR backend: {0}")]
    OcrSetup(String),
    #[error(transparent)]
    Workspace(#[from] WorkspaceError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("code language model: {0}")]
    ModelUnavailable(String),
    #[error("no code language model configured; build one with `psc2code build-model` and set `model`")]
    MissingModel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Ingest,
    Keyframes,
    Classify,
    Layout,
    Ocr,
    Correct,
    Workflow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageStatus {
    Computed,
    Cached,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: Stage,
    pub status: StageStatus,
    pub millis: u128,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub video_id: String,
    pub stages: Vec<StageReport>,
    pub frames: usize,
    pub informative: usize,
    pub valid: usize,
    pub ocr_frames: usize,
    pub ocr_computed: usize,
}

impl RunSummary {
    pub fn status(&self, stage: Stage) -> Option<StageStatus> {
        self.stages.iter().find(|s| s.stage == stage).map(|s| s.status)
    }
}

#[derive(Debug)]
pub struct VideoOutcome {
    pub video_id: String,
    pub result: Result<RunSummary, PipelineError>,
}

/// A video file or a directory of pre-extracted `<t>.png` frames.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VideoSource {
    pub video_id: String,
    pub path: PathBuf,
}

impl VideoSource {
    /// Names the video after the file stem (or directory name).
    pub fn from_path(path: impl Into<PathBuf>) -> Self {
        let path = path.into();
        let video_id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "video".into());
        Self { video_id, path }
    }
}

/// Runs every source; a failing video does not stop the others.
pub fn run_pipeline(ws: &Workspace, sources: &[VideoSource], cfg: &PipelineConfig) -> Vec<VideoOutcome> {
    // loaded once; a broken model fails every video that needs correcting
    let model: Result<Option<CodeLanguageModel>, String> = match cfg.model.as_deref() {
        Some(path) => CodeLanguageModel::load(path).map(Some).map_err(|e| e.to_string()),
        None => Ok(None),
    };
    sources
        .iter()
        .map(|src| {
            log::info!("processing {} from {}", src.video_id, src.path.display());
            let result = match &model {
                Ok(m) => run_video(ws, src, cfg, m.as_ref()),
                Err(e) => Err(PipelineError::ModelUnavailable(e.clone())),
            };
            if let Err(e) = &result {
                log::error!("{}: {e}", src.video_id);
            }
            VideoOutcome {
                video_id: src.video_id.clone(),
                result,
            }
        })
        .collect()
}

struct Tracker {
    stages: Vec<StageReport>,
    started: Instant,
}

impl Tracker {
    fn begin(&mut self) {
        self.started = Instant::now();
    }

    fn end(&mut self, stage: Stage, computed: bool) {
        self.stages.push(StageReport {
            stage,
            status: if computed {
                StageStatus::Computed
            } else {
                StageStatus::Cached
            },
            millis: self.started.elapsed().as_millis(),
        });
    }
}

/// Runs the stages for one video. `model` is only needed when correction has
/// to be recomputed.
pub fn run_video(
    ws: &Workspace,
    src: &VideoSource,
    cfg: &PipelineConfig,
    model: Option<&CodeLanguageModel>,
) -> Result<RunSummary, PipelineError> {
    let id = src.video_id.as_str();
    let lock = ws.lock(id);
    let _guard = lock.guard();
    let previous: Option<PipelineConfig> = ws
        .read_text(id, CONFIG_STAMP)
        .ok()
        .and_then(|t| PipelineConfig::from_toml(&t).ok());
    let prev = previous.as_ref();
    let mut track = Tracker {
        stages: Vec::new(),
        started: Instant::now(),
    };

    // ingest
    track.begin();
    let cached_manifest: Option<VideoManifest> = ws.read_json(id, MANIFEST).ok();
    let frame_files = list_frame_files(&ws.path(id, FRAMES_DIR)).unwrap_or_default();
    let mut dirty = cached_manifest.as_ref().is_none_or(|m| m.source != src.path) || frame_files.is_empty();
    let manifest = if dirty {
        ingest(ws, src, cfg)?
    } else {
        cached_manifest.expect("checked above")
    };
    track.end(Stage::Ingest, dirty);
    let origin = if manifest.source.is_dir() {
        FrameOrigin::Preextracted
    } else {
        FrameOrigin::Decoded
    };
    let frame_files = list_frame_files(&ws.path(id, FRAMES_DIR))?;
    let frame_path = |t: u32| ws.path(id, FRAMES_DIR).join(format!("{t}.png"));
    let load = |t: u32| Frame::load(t, &frame_path(t), origin);

    // keyframes
    track.begin();
    dirty |= !ws.exists(id, INFORMATIVE) || prev.is_none_or(|p| p.keyframes != cfg.keyframes);
    let informative: InformativeSet = if dirty {
        let mut scan = AnchorScan::new(cfg.keyframes.threshold);
        for (t, path) in &frame_files {
            let f = Frame::load(*t, path, origin)?;
            scan.push(*t, &f.gray);
        }
        let set = scan.finish()?;
        ws.write_json(id, INFORMATIVE, &set)?;
        set
    } else {
        ws.read_json(id, INFORMATIVE)?
    };
    track.end(Stage::Keyframes, dirty);

    // classify
    track.begin();
    dirty |= !ws.exists(id, CLASSIFIED) || prev.is_none_or(|p| p.classifier != cfg.classifier);
    let verdicts: Vec<FrameVerdict> = if dirty {
        let mut ccfg = cfg.classifier.clone();
        if let Some(labels) = &ccfg.labels {
            // a label directory holds one `<video_id>.json` per video
            if labels.is_dir() {
                ccfg.labels = Some(labels.join(format!("{id}.json")));
            }
        }
        let mut out = Vec::with_capacity(informative.kept.len());
        for chunk in informative.kept.chunks(CLASSIFY_CHUNK) {
            let frames = if ccfg.backend == Backend::Fixture {
                // labels only; skip decoding pixels
                chunk
                    .iter()
                    .map(|&t| Frame::new(t, image::RgbImage::new(1, 1), origin))
                    .collect::<Vec<_>>()
            } else {
                chunk.par_iter().map(|&t| load(t)).collect::<Result<Vec<_>, _>>()?
            };
            out.extend(classify_frames(&frames, &ccfg, &cfg.layout)?);
        }
        ws.write_json(id, CLASSIFIED, &out)?;
        out
    } else {
        ws.read_json(id, CLASSIFIED)?
    };
    let valid: Vec<u32> = verdicts.iter().filter(|v| v.valid).map(|v| v.t).collect();
    track.end(Stage::Classify, dirty);

    // layout
    track.begin();
    dirty |= !ws.exists(id, REGIONS) || prev.is_none_or(|p| p.layout != cfg.layout);
    let regions: Regions = if dirty {
        let frame_lines = valid
            .par_iter()
            .map(|&t| {
                let f = load(t)?;
                Ok(FrameLines {
                    t,
                    segments: detect_segments(&f.gray, &cfg.layout),
                })
            })
            .collect::<Result<Vec<_>, PipelineError>>()?;
        let regions = cluster_layouts(&frame_lines, manifest.resolution, &cfg.layout);
        ws.write_json(id, REGIONS, &regions)?;
        regions
    } else {
        ws.read_json(id, REGIONS)?
    };
    track.end(Stage::Layout, dirty);

    // ocr, cached per frame
    track.begin();
    if dirty || prev.is_none_or(|p| p.ocr != cfg.ocr) {
        ws.remove(id, OCR_DIR)?;
        dirty = true;
    }
    let targets: Vec<(u32, crate::layout::Rect)> = valid
        .iter()
        .filter_map(|&t| regions.code_region(t).map(|r| (t, r)))
        .collect();
    let have: BTreeSet<u32> = ws.timed_files(id, OCR_DIR, "json")?.into_iter().map(|(t, _)| t).collect();
    let target_ts: BTreeSet<u32> = targets.iter().map(|(t, _)| *t).collect();
    // stale pages of frames that are no longer targets
    for t in have.difference(&target_ts) {
        ws.remove(id, format!("{OCR_DIR}/{t}.json"))?;
        dirty = true;
    }
    let missing: Vec<(u32, crate::layout::Rect)> = targets.iter().copied().filter(|(t, _)| !have.contains(t)).collect();
    if !missing.is_empty() {
        let backend = ocr_backend(cfg, id)?;
        missing.par_iter().try_for_each(|&(t, region)| -> Result<(), PipelineError> {
            let frame = load(t)?;
            let words = ocr_region(t, &frame.color, region, backend.as_ref()).map_err(|source| PipelineError::Ocr { t, source })?;
            ws.write_json(id, format!("{OCR_DIR}/{t}.json"), &OcrPage { words })?;
            Ok(())
        })?;
        dirty = true;
    }
    track.end(Stage::Ocr, dirty);

    // correct
    track.begin();
    dirty |= !ws.exists(id, CORRECTION_REPORT)
        || !ws.exists(id, DOCUMENT)
        || prev.is_none_or(|p| p.correction != cfg.correction || p.model != cfg.model);
    if dirty {
        let model = model.ok_or(PipelineError::MissingModel)?;
        let mut snaps = Vec::with_capacity(targets.len());
        for (t, path) in ws.timed_files(id, OCR_DIR, "json")? {
            let page: OcrPage = crate::workspace::read_json_file(&path)?;
            snaps.push(reconstruct_lines(t, &page.words));
        }
        let (corrected, report) = correct_video(&snaps, model, &cfg.correction);
        ws.remove(id, CODE_DIR)?;
        for s in &corrected {
            ws.write_text(id, format!("{CODE_DIR}/{}.txt", s.t), &s.text())?;
        }
        ws.write_json(id, CORRECTION_REPORT, &report)?;
        ws.write_text(id, DOCUMENT, &document(&corrected))?;
    }
    track.end(Stage::Correct, dirty);

    // workflow
    track.begin();
    dirty |= !ws.exists(id, WORKFLOW) || prev.is_none_or(|p| p.workflow != cfg.workflow);
    if dirty {
        let snaps = crate::search::load_snapshots(ws, id)?;
        ws.write_json(id, WORKFLOW, &reconstruct_workflow(&snaps, cfg.workflow.file_eps))?;
    }
    track.end(Stage::Workflow, dirty);

    let stamp = cfg.to_toml().expect("config always serialises");
    ws.write_text(id, CONFIG_STAMP, &stamp)?;

    Ok(RunSummary {
        video_id: id.to_string(),
        stages: track.stages,
        frames: frame_files.len(),
        informative: informative.kept.len(),
        valid: valid.len(),
        ocr_frames: targets.len(),
        ocr_computed: missing.len(),
    })
}

/// Samples frames into `frames/` and writes the manifest.
fn ingest(ws: &Workspace, src: &VideoSource, cfg: &PipelineConfig) -> Result<VideoManifest, PipelineError> {
    let id = &src.video_id;
    // anything derived from an older source is void
    for rel in [FRAMES_DIR, INFORMATIVE, CLASSIFIED, REGIONS, OCR_DIR, CODE_DIR, CORRECTION_REPORT, DOCUMENT, WORKFLOW] {
        ws.remove(id, rel)?;
    }
    let frames_dir = ws.path(id, FRAMES_DIR);
    std::fs::create_dir_all(&frames_dir).map_err(|e| io_err(&frames_dir, e))?;
    if src.path.is_dir() {
        for (t, path) in list_frame_files(&src.path)? {
            let dest = frames_dir.join(format!("{t}.png"));
            std::fs::copy(&path, &dest).map_err(|e| io_err(&dest, e))?;
        }
    } else {
        Decoder::resolve(cfg.decoder.as_deref()).extract(&src.path, &frames_dir, u32::MAX)?;
    }
    let mut manifest = VideoManifest::from_frame_dir(id, &frames_dir)?;
    manifest.source = src.path.clone();
    manifest.title = src
        .path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    manifest.validate()?;
    ws.create_video(&manifest)?;
    Ok(manifest)
}

fn io_err(path: &Path, source: std::io::Error) -> PipelineError {
    PipelineError::Workspace(WorkspaceError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn ocr_backend(cfg: &PipelineConfig, video_id: &str) -> Result<Box<dyn OcrBackend>, PipelineError> {
    Ok(match cfg.ocr.backend {
        OcrBackendKind::Fixture => {
            let dir = cfg
                .ocr
                .fixture_dir
                .clone()
                .ok_or_else(|| PipelineError::OcrSetup("fixture backend needs `ocr.fixture_dir`".into()))?;
            // a per-video subdirectory wins over a flat directory
            let per_video = dir.join(video_id);
            Box::new(FixtureOcr::new(if per_video.is_dir() { per_video } else { dir }))
        }
        OcrBackendKind::Remote => Box::new(RemoteOcr::from_env(cfg.ocr.endpoint.as_deref())),
        OcrBackendKind::Local => {
            let local = LocalOcr::default();
            if !local.available() {
                return Err(PipelineError::OcrSetup(format!("`{}` not found on PATH", local.program)));
            }
            Box::new(local)
        }
    })
}

/// The whole video's corrected code, frame by frame.
pub fn document(snapshots: &[CodeSnapshot]) -> String {
    let mut out = String::new();
    for s in snapshots {
        out.push_str(&format!("// t={}\n", s.t));
        out.push_str(&s.text());
        out.push('\n');
    }
    out
}

/// Reads `correction_report.json` of a processed video.
pub fn load_report(ws: &Workspace, video_id: &str) -> Result<CorrectionReport, WorkspaceError> {
    ws.read_json(video_id, CORRECTION_REPORT)
}
