//! Non-informative frame reduction.
//!
//! Consecutive frames are compared with the normalised root-mean-square error
//! of their grayscale planes. The scan keeps an anchor frame; every later
//! frame closer than the threshold to the anchor is dropped, and the first one
//! that is not becomes the new anchor.

use image::GrayImage;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::Frame;

pub const DEFAULT_THRESHOLD: f64 = 0.05;

#[derive(Debug, Error, PartialEq)]
pub enum KeyframeError {
    #[error("frame dimensions differ: {0:?} vs {1:?}")]
    DimensionMismatch((u32, u32), (u32, u32)),
    #[error("no frames to filter")]
    EmptySequence,
}

/// Result of the anchor scan, persisted as `informative.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InformativeSet {
    pub threshold: f64,
    pub kept: Vec<u32>,
    /// `(t, anchor_t)`: frame `t` was subsumed by kept frame `anchor_t`.
    pub dropped: Vec<(u32, u32)>,
    /// Kept frames whose size differs from the first frame (corrupt decode).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flagged: Vec<u32>,
}

/// `sqrt(mean((a - b)^2)) / 255` over the grayscale planes.
pub fn nrmse(a: &Frame, b: &Frame) -> Result<f64, KeyframeError> {
    nrmse_gray(&a.gray, &b.gray)
}

pub fn nrmse_gray(a: &GrayImage, b: &GrayImage) -> Result<f64, KeyframeError> {
    if a.dimensions() != b.dimensions() {
        return Err(KeyframeError::DimensionMismatch(a.dimensions(), b.dimensions()));
    }
    let n = a.as_raw().len();
    if n == 0 {
        return Ok(0.0);
    }
    let sum_sq: u64 = a
        .as_raw()
        .iter()
        .zip(b.as_raw())
        .map(|(&x, &y)| {
            let d = i64::from(x) - i64::from(y);
            (d * d) as u64
        })
        .sum();
    Ok((sum_sq as f64 / n as f64).sqrt() / 255.0)
}

/// Incremental form of [`filter_informative`], for callers that stream frames
/// from disk instead of holding a whole video in memory.
#[derive(Debug)]
pub struct AnchorScan {
    threshold: f64,
    dims: Option<(u32, u32)>,
    anchor: Option<(u32, GrayImage)>,
    set: InformativeSet,
}

impl AnchorScan {
    pub fn new(threshold: f64) -> Self {
        Self {
            threshold,
            dims: None,
            anchor: None,
            set: InformativeSet {
                threshold,
                kept: Vec::new(),
                dropped: Vec::new(),
                flagged: Vec::new(),
            },
        }
    }

    /// Feeds the next frame; returns whether it was kept.
    pub fn push(&mut self, t: u32, gray: &GrayImage) -> bool {
        let dims = *self.dims.get_or_insert(gray.dimensions());
        if gray.dimensions() != dims {
            // never resized, never used as an anchor
            self.set.kept.push(t);
            self.set.flagged.push(t);
            return true;
        }
        if let Some((anchor_t, anchor)) = &self.anchor {
            let d = nrmse_gray(anchor, gray).expect("dimensions checked above");
            if d < self.threshold {
                self.set.dropped.push((t, *anchor_t));
                return false;
            }
        }
        self.anchor = Some((t, gray.clone()));
        self.set.kept.push(t);
        true
    }

    pub fn finish(self) -> Result<InformativeSet, KeyframeError> {
        if self.dims.is_none() {
            return Err(KeyframeError::EmptySequence);
        }
        Ok(self.set)
    }
}

pub fn filter_informative(frames: &[Frame], threshold: f64) -> Result<InformativeSet, KeyframeError> {
    let mut scan = AnchorScan::new(threshold);
    for f in frames {
        scan.push(f.t, &f.gray);
    }
    scan.finish()
}
