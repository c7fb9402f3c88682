//! Valid/invalid code-frame classification behind a pluggable backend.
//!
//! `heuristic` is a geometric stand-in built on the layout detector, `fixture`
//! replays a label file, and `external` talks to a classifier service over
//! HTTP (`POST /classify`, `POST /classify_batch`).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use base64::Engine as _;
use image::imageops::{self, FilterType};
use image::GrayImage;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::Frame;
use crate::layout::{candidate_rectangles, cluster_segments, detect_segments, BoundarySegment, LayoutConfig, Orientation, Rect};
use crate::ocr::encode_png;

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("no frames to classify")]
    EmptyInput,
    #[error("invalid classifier config: {0}")]
    InvalidConfig(String),
    #[error(
        "classifier endpoint {endpoint} is unavailable ({reason}); \
         rerun with `--classifier heuristic` or `--classifier fixture --labels <file>`"
    )]
    ExternalUnavailable { endpoint: String, reason: String },
    #[error("classifier endpoint {endpoint} broke the protocol: {reason}")]
    Protocol { endpoint: String, reason: String },
    #[error("label file has no entry for frame t={0}")]
    FixtureMissingLabel(u32),
    #[error("cannot read label file {path}: {reason}")]
    LabelFile { path: PathBuf, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    #[default]
    Heuristic,
    External,
    Fixture,
}

impl std::str::FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "heuristic" => Ok(Self::Heuristic),
            "external" => Ok(Self::External),
            "fixture" => Ok(Self::Fixture),
            other => Err(format!("unknown classifier backend `{other}` (heuristic, external, fixture)")),
        }
    }
}

/// Stored in `classified.json`, one per informative frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameVerdict {
    pub t: u32,
    pub valid: bool,
    pub confidence: f64,
    pub backend: Backend,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HeuristicConfig {
    pub min_region_frac: f64,
    /// A popup covers between these fractions of the window it sits in.
    pub popup_min_frac: f64,
    pub popup_max_frac: f64,
}

impl Default for HeuristicConfig {
    fn default() -> Self {
        Self {
            min_region_frac: 0.1,
            popup_min_frac: 0.01,
            popup_max_frac: 0.4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierConfig {
    pub backend: Backend,
    pub endpoint: Option<String>,
    pub labels: Option<PathBuf>,
    pub rescale_edge: u32,
    /// In-flight requests to the external backend.
    pub concurrency: usize,
    /// Send all frames in one `/classify_batch` call instead.
    pub batch: bool,
    pub timeout_s: u64,
    pub heuristic: HeuristicConfig,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            backend: Backend::Heuristic,
            endpoint: None,
            labels: None,
            rescale_edge: 300,
            concurrency: 4,
            batch: false,
            timeout_s: 30,
            heuristic: HeuristicConfig::default(),
        }
    }
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<(), ClassifyError> {
        let bad = |m: &str| Err(ClassifyError::InvalidConfig(m.to_string()));
        if self.rescale_edge < 32 {
            return bad("rescale_edge must be at least 32");
        }
        if self.concurrency == 0 {
            return bad("concurrency must be at least 1");
        }
        match self.backend {
            Backend::External if self.endpoint.is_none() => bad("external backend needs an endpoint"),
            Backend::Fixture if self.labels.is_none() => bad("fixture backend needs a label file"),
            _ => Ok(()),
        }
    }
}

/// Classifies every frame; verdicts come back in input order.
pub fn classify_frames(
    frames: &[Frame],
    cfg: &ClassifierConfig,
    layout: &LayoutConfig,
) -> Result<Vec<FrameVerdict>, ClassifyError> {
    if frames.is_empty() {
        return Err(ClassifyError::EmptyInput);
    }
    cfg.validate()?;
    match cfg.backend {
        Backend::Heuristic => Ok(frames
            .par_iter()
            .map(|f| heuristic_classify(f.t, &f.gray, layout, &cfg.heuristic))
            .collect()),
        Backend::Fixture => {
            let labels = load_labels(cfg.labels.as_deref().expect("validated"))?;
            frames.iter().map(|f| fixture_verdict(&labels, f.t)).collect()
        }
        Backend::External => {
            let client = ExternalClassifier::new(cfg)?;
            if cfg.batch {
                client.classify_batch(frames)
            } else {
                client.classify_all(frames)
            }
        }
    }
}

// ---------------------------------------------------------------- heuristic

/// Whether a detected line runs along `[from, to]` without extending past it
/// by more than `slack`, i.e. it belongs to a box of exactly that extent.
fn tight_side(lines: &[BoundarySegment], o: Orientation, pos: u32, from: u32, to: u32, slack: u32) -> bool {
    lines.iter().any(|l| {
        l.orientation == o
            && l.position == pos
            && l.spans(from, to, slack)
            && l.start + slack >= from
            && l.end <= to + slack
    })
}

/// Only the vertical sides must stop at the box: a popup opened under the
/// current line shares its top or bottom edge with the highlight band, and
/// clustering keeps the longer band edge. Candidate rectangles already have
/// their horizontal sides covered.
fn is_boxed(r: &Rect, lines: &[BoundarySegment], slack: u32) -> bool {
    tight_side(lines, Orientation::Vertical, r.x, r.y, r.bottom(), slack)
        && tight_side(lines, Orientation::Vertical, r.right(), r.y, r.bottom(), slack)
}

/// Why a frame was judged the way it was; `heuristic_classify` keeps only the
/// verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct HeuristicReport {
    pub lines: Vec<BoundarySegment>,
    pub code_region: Option<Rect>,
    pub popup: Option<(Rect, Rect)>,
}

impl HeuristicReport {
    pub fn valid(&self) -> bool {
        self.code_region.is_some() && self.popup.is_none()
    }
}

/// Inspects one frame on its own: a code region must be carved out by at least
/// one detected boundary line (a bare full-screen slide has none), and no
/// closed box may float inside a larger window (the popup signature).
pub fn heuristic_inspect(gray: &GrayImage, layout: &LayoutConfig, cfg: &HeuristicConfig) -> HeuristicReport {
    let dims = gray.dimensions();
    let frame_area = u64::from(dims.0) * u64::from(dims.1);
    let lines = cluster_segments(&detect_segments(gray, layout), layout.line_eps_px, layout.overlap_min)
        .catalog
        .lines;
    let slack = layout.rect_slack_px;
    let candidates = candidate_rectangles(&lines, dims, layout);
    let big = |r: &Rect| frame_area > 0 && r.area() as f64 >= cfg.min_region_frac * frame_area as f64;

    let mut popup = None;
    'search: for outer in candidates.iter().filter(|r| big(r)) {
        for inner in &candidates {
            if !inner.strictly_inside(outer, slack) {
                continue;
            }
            let frac = inner.area() as f64 / outer.area() as f64;
            if frac >= cfg.popup_min_frac && frac <= cfg.popup_max_frac && is_boxed(inner, &lines, slack) {
                popup = Some((*outer, *inner));
                break 'search;
            }
        }
    }

    let layout_cfg = LayoutConfig {
        min_region_frac: cfg.min_region_frac,
        ..layout.clone()
    };
    let (_, code) = crate::layout::detect_code_region(&lines, dims, &layout_cfg);
    let full = Rect::new(0, 0, dims.0, dims.1);
    HeuristicReport {
        code_region: code.filter(|r| *r != full),
        lines,
        popup,
    }
}

pub fn heuristic_classify(t: u32, gray: &GrayImage, layout: &LayoutConfig, cfg: &HeuristicConfig) -> FrameVerdict {
    FrameVerdict {
        t,
        valid: heuristic_inspect(gray, layout, cfg).valid(),
        confidence: 1.0,
        backend: Backend::Heuristic,
    }
}

// ------------------------------------------------------------------ fixture

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Label {
    pub t: u32,
    pub valid: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
}

/// Reads a label file: a JSON array of `{"t": .., "valid": ..}`.
pub fn load_labels(path: &Path) -> Result<BTreeMap<u32, Label>, ClassifyError> {
    let err = |reason: String| ClassifyError::LabelFile {
        path: path.to_path_buf(),
        reason,
    };
    let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
    let labels: Vec<Label> = serde_json::from_str(&text).map_err(|e| err(e.to_string()))?;
    Ok(labels.into_iter().map(|l| (l.t, l)).collect())
}

fn fixture_verdict(labels: &BTreeMap<u32, Label>, t: u32) -> Result<FrameVerdict, ClassifyError> {
    let l = labels.get(&t).ok_or(ClassifyError::FixtureMissingLabel(t))?;
    Ok(FrameVerdict {
        t,
        valid: l.valid,
        confidence: l.confidence.unwrap_or(1.0),
        backend: Backend::Fixture,
    })
}

// ----------------------------------------------------------------- external

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyRequest {
    pub t: u32,
    pub png_base64: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyResponse {
    pub t: u32,
    pub valid: bool,
    pub confidence: f64,
}

/// Downscales to the classifier's square input size (bilinear) and wraps the
/// PNG for the wire.
pub fn encode_request(frame: &Frame, edge: u32) -> ClassifyRequest {
    let small = imageops::resize(&frame.color, edge, edge, FilterType::Triangle);
    ClassifyRequest {
        t: frame.t,
        png_base64: base64::engine::general_purpose::STANDARD.encode(encode_png(&small)),
    }
}

pub struct ExternalClassifier {
    endpoint: String,
    edge: u32,
    concurrency: usize,
    client: reqwest::blocking::Client,
}

impl ExternalClassifier {
    pub fn new(cfg: &ClassifierConfig) -> Result<Self, ClassifyError> {
        let endpoint = cfg
            .endpoint
            .clone()
            .ok_or_else(|| ClassifyError::InvalidConfig("external backend needs an endpoint".into()))?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(cfg.timeout_s))
            .build()
            .map_err(|e| ClassifyError::ExternalUnavailable {
                endpoint: endpoint.clone(),
                reason: e.to_string(),
            })?;
        Ok(Self {
            endpoint: endpoint.trim_end_matches('/').to_string(),
            edge: cfg.rescale_edge,
            concurrency: cfg.concurrency,
            client,
        })
    }

    fn unavailable(&self, reason: impl ToString) -> ClassifyError {
        ClassifyError::ExternalUnavailable {
            endpoint: self.endpoint.clone(),
            reason: reason.to_string(),
        }
    }

    fn protocol(&self, reason: impl ToString) -> ClassifyError {
        ClassifyError::Protocol {
            endpoint: self.endpoint.clone(),
            reason: reason.to_string(),
        }
    }

    fn post<B: Serialize, R: serde::de::DeserializeOwned>(&self, path: &str, body: &B) -> Result<R, ClassifyError> {
        let resp = self
            .client
            .post(format!("{}{path}", self.endpoint))
            .json(body)
            .send()
            .map_err(|e| self.unavailable(e))?;
        let status = resp.status();
        if !status.is_success() {
            return Err(self.unavailable(format!("HTTP {status}")));
        }
        resp.json().map_err(|e| self.protocol(e))
    }

    fn verdict(&self, sent: u32, r: ClassifyResponse) -> Result<FrameVerdict, ClassifyError> {
        if r.t != sent {
            return Err(self.protocol(format!("sent t={sent}, response echoed t={}", r.t)));
        }
        if !(0.0..=1.0).contains(&r.confidence) {
            return Err(self.protocol(format!("confidence {} outside [0, 1]", r.confidence)));
        }
        Ok(FrameVerdict {
            t: r.t,
            valid: r.valid,
            confidence: r.confidence,
            backend: Backend::External,
        })
    }

    pub fn classify_one(&self, frame: &Frame) -> Result<FrameVerdict, ClassifyError> {
        let r: ClassifyResponse = self.post("/classify", &encode_request(frame, self.edge))?;
        self.verdict(frame.t, r)
    }

    /// One request per frame with up to `concurrency` in flight; results are
    /// put back in input order whatever order they finish in.
    pub fn classify_all(&self, frames: &[Frame]) -> Result<Vec<FrameVerdict>, ClassifyError> {
        let next = AtomicUsize::new(0);
        let results: Mutex<Vec<Option<Result<FrameVerdict, ClassifyError>>>> =
            Mutex::new((0..frames.len()).map(|_| None).collect());
        std::thread::scope(|s| {
            for _ in 0..self.concurrency.min(frames.len()) {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    if i >= frames.len() {
                        break;
                    }
                    let r = self.classify_one(&frames[i]);
                    let failed = r.is_err();
                    results.lock().expect("poisoned")[i] = Some(r);
                    if failed {
                        // stop handing out work; the first error is reported
                        next.store(frames.len(), Ordering::SeqCst);
                    }
                });
            }
        });
        let results = results.into_inner().expect("poisoned");
        let mut out = Vec::with_capacity(frames.len());
        let mut first_err = None;
        for r in results {
            match r {
                Some(Ok(v)) => out.push(v),
                Some(Err(e)) => {
                    first_err.get_or_insert(e);
                }
                None => {}
            }
        }
        match first_err {
            Some(e) => Err(e),
            None => Ok(out),
        }
    }

    pub fn classify_batch(&self, frames: &[Frame]) -> Result<Vec<FrameVerdict>, ClassifyError> {
        let reqs: Vec<ClassifyRequest> = frames.par_iter().map(|f| encode_request(f, self.edge)).collect();
        let resps: Vec<ClassifyResponse> = self.post("/classify_batch", &reqs)?;
        if resps.len() != frames.len() {
            return Err(self.protocol(format!("sent {} frames, got {} verdicts", frames.len(), resps.len())));
        }
        let mut by_t: BTreeMap<u32, ClassifyResponse> = resps.into_iter().map(|r| (r.t, r)).collect();
        frames
            .iter()
            .map(|f| {
                let r = by_t
                    .remove(&f.t)
                    .ok_or_else(|| self.protocol(format!("no verdict for t={}", f.t)))?;
                self.verdict(f.t, r)
            })
            .collect()
    }
}
