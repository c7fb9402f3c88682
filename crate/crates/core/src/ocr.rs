//! OCR backends and reconstruction of positioned words into code lines.
//!
//! Three backends share [`OcrBackend`]: a record/replay fixture store, a
//! remote vision API client and a local `tesseract` subprocess. The fixture
//! file format (`ocr/<t>.json`) doubles as the cache for the other two.

use std::io::Cursor;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Duration;

use base64::Engine;
use image::RgbImage;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::layout::Rect;

pub const VISION_KEY_ENV: &str = "PSC2CODE_VISION_KEY";
pub const DEFAULT_VISION_ENDPOINT: &str = "https://vision.googleapis.com/v1/images:annotate";
/// Words whose vertical centres are within this many median word heights
/// share a line.
pub const LINE_GROUPING_FACTOR: f64 = 0.6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OcrError {
    #[error("OCR backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("OCR quota exceeded: {0}")]
    QuotaExceeded(String),
    #[error("no OCR fixture for t={0}")]
    MissingFixture(u32),
    #[error("malformed OCR response: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OcrWord {
    pub text: String,
    /// `[x, y, width, height]` in region coordinates.
    #[serde(rename = "box")]
    pub bbox: [u32; 4],
}

impl OcrWord {
    pub fn new(text: impl Into<String>, x: u32, y: u32, w: u32, h: u32) -> Self {
        Self {
            text: text.into(),
            bbox: [x, y, w, h],
        }
    }

    fn center_y(&self) -> f64 {
        f64::from(self.bbox[1]) + f64::from(self.bbox[3]) / 2.0
    }
}

/// Body of `ocr/<t>.json`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OcrPage {
    pub words: Vec<OcrWord>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CodeSnapshot {
    pub t: u32,
    pub lines: Vec<String>,
    #[serde(default)]
    pub words: Vec<Vec<OcrWord>>,
}

impl CodeSnapshot {
    pub fn from_lines(t: u32, lines: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Self {
            t,
            lines: lines.into_iter().map(Into::into).collect(),
            words: Vec::new(),
        }
    }

    /// The `code/<t>.txt` form.
    pub fn text(&self) -> String {
        let mut s = self.lines.join("\n");
        if !s.is_empty() {
            s.push('\n');
        }
        s
    }

    pub fn from_text(t: u32, text: &str) -> Self {
        Self::from_lines(t, text.lines())
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Groups words into lines by vertical centre, orders lines top to bottom and
/// words left to right, and rebuilds indentation from the left offset of each
/// line's first word.
pub fn reconstruct_lines(t: u32, words: &[OcrWord]) -> CodeSnapshot {
    let mut words: Vec<OcrWord> = words.iter().filter(|w| !w.text.is_empty()).cloned().collect();
    if words.is_empty() {
        return CodeSnapshot {
            t,
            ..Default::default()
        };
    }
    // total order so the result does not depend on input order
    words.sort_by(|a, b| a.center_y().total_cmp(&b.center_y()).then_with(|| a.cmp(b)));

    let h = median(words.iter().map(|w| f64::from(w.bbox[3])).collect()).max(1.0);
    let char_w = median(
        words
            .iter()
            .map(|w| f64::from(w.bbox[2]) / w.text.chars().count() as f64)
            .collect(),
    )
    .max(1.0);
    let left = words.iter().map(|w| w.bbox[0]).min().unwrap_or(0);

    let mut rows: Vec<Vec<OcrWord>> = Vec::new();
    let mut anchor = f64::NEG_INFINITY;
    for w in words {
        let cy = w.center_y();
        match rows.last_mut() {
            Some(row) if cy - anchor <= LINE_GROUPING_FACTOR * h => row.push(w),
            _ => {
                anchor = cy;
                rows.push(vec![w]);
            }
        }
    }

    let mut lines = Vec::with_capacity(rows.len());
    for row in &mut rows {
        row.sort_by(|a, b| a.bbox[0].cmp(&b.bbox[0]).then_with(|| a.cmp(b)));
        let indent = (f64::from(row[0].bbox[0] - left) / char_w).floor() as usize;
        let body: Vec<&str> = row.iter().map(|w| w.text.as_str()).collect();
        lines.push(format!("{}{}", " ".repeat(indent), body.join(" ")));
    }
    CodeSnapshot { t, lines, words: rows }
}

/// Something that turns a cropped code region into positioned words.
pub trait OcrBackend: Send + Sync {
    fn name(&self) -> &'static str;
    fn recognize(&self, t: u32, region: &RgbImage) -> Result<Vec<OcrWord>, OcrError>;
}

/// Crops `region` out of a frame; the rectangle is clamped to the image.
pub fn crop(frame: &RgbImage, region: Rect) -> RgbImage {
    let (fw, fh) = frame.dimensions();
    let x = region.x.min(fw);
    let y = region.y.min(fh);
    let w = region.w.min(fw - x);
    let h = region.h.min(fh - y);
    image::imageops::crop_imm(frame, x, y, w, h).to_image()
}

/// Crops the region and runs the backend. Boxes come back in region
/// coordinates and are clamped to the region.
pub fn ocr_region(
    t: u32,
    frame: &RgbImage,
    region: Rect,
    backend: &dyn OcrBackend,
) -> Result<Vec<OcrWord>, OcrError> {
    if region.w == 0 || region.h == 0 {
        return Err(OcrError::Malformed("degenerate region".into()));
    }
    let img = crop(frame, region);
    let (rw, rh) = img.dimensions();
    let words = backend.recognize(t, &img)?;
    Ok(words
        .into_iter()
        .filter(|w| !w.text.is_empty())
        .map(|mut w| {
            w.bbox[0] = w.bbox[0].min(rw);
            w.bbox[1] = w.bbox[1].min(rh);
            w.bbox[2] = w.bbox[2].min(rw - w.bbox[0]);
            w.bbox[3] = w.bbox[3].min(rh - w.bbox[1]);
            w
        })
        .collect())
}

pub fn encode_png(img: &RgbImage) -> Vec<u8> {
    let mut buf = Cursor::new(Vec::new());
    img.write_to(&mut buf, image::ImageFormat::Png)
        .expect("PNG encoding into memory cannot fail");
    buf.into_inner()
}

/// Replays stored responses from `<dir>/<t>.json`.
#[derive(Debug, Clone)]
pub struct FixtureOcr {
    pub dir: PathBuf,
}

impl FixtureOcr {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn load(&self, t: u32) -> Result<Vec<OcrWord>, OcrError> {
        let path = self.dir.join(format!("{t}.json"));
        let body = std::fs::read(&path).map_err(|_| OcrError::MissingFixture(t))?;
        let page: OcrPage = serde_json::from_slice(&body)
            .map_err(|e| OcrError::Malformed(format!("{}: {e}", path.display())))?;
        Ok(page.words)
    }
}

impl OcrBackend for FixtureOcr {
    fn name(&self) -> &'static str {
        "fixture"
    }

    fn recognize(&self, t: u32, _region: &RgbImage) -> Result<Vec<OcrWord>, OcrError> {
        self.load(t)
    }
}

/// Client for a Google-Vision-compatible `images:annotate` endpoint.
#[derive(Debug, Clone)]
pub struct RemoteOcr {
    pub endpoint: String,
    pub api_key: Option<String>,
    pub retries: u32,
    pub backoff: Duration,
    pub timeout: Duration,
}

impl RemoteOcr {
    /// Key from `PSC2CODE_VISION_KEY`, endpoint from the override or the
    /// public default.
    pub fn from_env(endpoint: Option<&str>) -> Self {
        Self {
            endpoint: endpoint.unwrap_or(DEFAULT_VISION_ENDPOINT).to_string(),
            api_key: std::env::var(VISION_KEY_ENV).ok().filter(|k| !k.is_empty()),
            retries: 2,
            backoff: Duration::from_millis(500),
            timeout: Duration::from_secs(30),
        }
    }

    fn request_body(region: &RgbImage) -> serde_json::Value {
        let content = base64::engine::general_purpose::STANDARD.encode(encode_png(region));
        serde_json::json!({
            "requests": [{
                "image": {"content": content},
                "features": [{"type": "DOCUMENT_TEXT_DETECTION"}]
            }]
        })
    }

    fn call_once(
        &self,
        client: &reqwest::blocking::Client,
        body: &serde_json::Value,
    ) -> Result<Vec<OcrWord>, OcrError> {
        let url = match &self.api_key {
            Some(key) => reqwest::Url::parse_with_params(&self.endpoint, &[("key", key)]),
            None => reqwest::Url::parse(&self.endpoint),
        }
        .map_err(|e| OcrError::BackendUnavailable(format!("{}: {e}", self.endpoint)))?;
        let resp = client
            .post(url)
            .json(body)
            .send()
            .map_err(|e| OcrError::BackendUnavailable(format!("{}: {e}", self.endpoint)))?;
        let status = resp.status();
        if status.as_u16() == 429 {
            return Err(OcrError::QuotaExceeded(self.endpoint.clone()));
        }
        if !status.is_success() {
            return Err(OcrError::BackendUnavailable(format!("{}: HTTP {status}", self.endpoint)));
        }
        let value: serde_json::Value = resp
            .json()
            .map_err(|e| OcrError::Malformed(e.to_string()))?;
        parse_vision_response(&value)
    }
}

impl OcrBackend for RemoteOcr {
    fn name(&self) -> &'static str {
        "remote"
    }

    fn recognize(&self, _t: u32, region: &RgbImage) -> Result<Vec<OcrWord>, OcrError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(self.timeout)
            .build()
            .map_err(|e| OcrError::BackendUnavailable(e.to_string()))?;
        let body = Self::request_body(region);
        let mut delay = self.backoff;
        let mut attempt = 0;
        loop {
            match self.call_once(&client, &body) {
                Err(OcrError::BackendUnavailable(_) | OcrError::QuotaExceeded(_))
                    if attempt < self.retries =>
                {
                    attempt += 1;
                    std::thread::sleep(delay);
                    delay *= 2;
                }
                other => return other,
            }
        }
    }
}

/// Extracts word boxes from an `images:annotate` response. The first text
/// annotation is the whole page and is skipped.
pub fn parse_vision_response(value: &serde_json::Value) -> Result<Vec<OcrWord>, OcrError> {
    let first = value
        .get("responses")
        .and_then(|r| r.get(0))
        .ok_or_else(|| OcrError::Malformed("missing responses[0]".into()))?;
    if let Some(err) = first.get("error") {
        return Err(OcrError::BackendUnavailable(err.to_string()));
    }
    let Some(annotations) = first.get("textAnnotations").and_then(|a| a.as_array()) else {
        return Ok(Vec::new());
    };
    let mut words = Vec::new();
    for ann in annotations.iter().skip(1) {
        let text = ann.get("description").and_then(|d| d.as_str()).unwrap_or("");
        let vertices = ann
            .pointer("/boundingPoly/vertices")
            .and_then(|v| v.as_array())
            .ok_or_else(|| OcrError::Malformed("annotation without boundingPoly".into()))?;
        // missing coordinates are zero in the Vision API's JSON encoding
        let coord = |v: &serde_json::Value, k: &str| v.get(k).and_then(|c| c.as_i64()).unwrap_or(0).max(0) as u32;
        let xs: Vec<u32> = vertices.iter().map(|v| coord(v, "x")).collect();
        let ys: Vec<u32> = vertices.iter().map(|v| coord(v, "y")).collect();
        let (Some(&x0), Some(&x1), Some(&y0), Some(&y1)) =
            (xs.iter().min(), xs.iter().max(), ys.iter().min(), ys.iter().max())
        else {
            continue;
        };
        if !text.is_empty() {
            words.push(OcrWord::new(text, x0, y0, x1 - x0, y1 - y0));
        }
    }
    Ok(words)
}

/// Runs a local `tesseract` binary and parses its TSV output.
#[derive(Debug, Clone)]
pub struct LocalOcr {
    pub program: String,
}

impl Default for LocalOcr {
    fn default() -> Self {
        Self {
            program: "tesseract".into(),
        }
    }
}

impl LocalOcr {
    pub fn available(&self) -> bool {
        Command::new(&self.program).arg("--version").output().is_ok()
    }
}

impl OcrBackend for LocalOcr {
    fn name(&self) -> &'static str {
        "local"
    }

    fn recognize(&self, _t: u32, region: &RgbImage) -> Result<Vec<OcrWord>, OcrError> {
        let dir = tempfile::tempdir().map_err(|e| OcrError::BackendUnavailable(e.to_string()))?;
        let input = dir.path().join("region.png");
        region
            .save(&input)
            .map_err(|e| OcrError::BackendUnavailable(e.to_string()))?;
        let out = Command::new(&self.program)
            .arg(&input)
            .args(["stdout", "--psm", "6", "tsv"])
            .output()
            .map_err(|e| OcrError::BackendUnavailable(format!("{}: {e}", self.program)))?;
        if !out.status.success() {
            return Err(OcrError::BackendUnavailable(
                String::from_utf8_lossy(&out.stderr).trim().to_string(),
            ));
        }
        parse_tesseract_tsv(&String::from_utf8_lossy(&out.stdout))
    }
}

/// Word rows (level 5) of tesseract's TSV output.
pub fn parse_tesseract_tsv(tsv: &str) -> Result<Vec<OcrWord>, OcrError> {
    let mut words = Vec::new();
    for line in tsv.lines().skip(1) {
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() < 12 || cols[0] != "5" {
            continue;
        }
        let text = cols[11].trim();
        if text.is_empty() {
            continue;
        }
        let num = |i: usize| {
            cols[i]
                .parse::<i64>()
                .map(|v| v.max(0) as u32)
                .map_err(|_| OcrError::Malformed(format!("bad tsv row: {line}")))
        };
        words.push(OcrWord::new(text, num(6)?, num(7)?, num(8)?, num(9)?));
    }
    Ok(words)
}

/// Reads a cached page, if one exists.
pub fn read_page(path: &Path) -> Option<OcrPage> {
    let body = std::fs::read(path).ok()?;
    serde_json::from_slice(&body).ok()
}
