//! Evaluation metrics: classifier confusion scores, box IoU, ranked retrieval
//! and correction accuracies. Ratios with a zero denominator are `None`.

use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize};
use thiserror::Error;

use crate::correct::CorrectionReport;
use crate::layout::Rect;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("query `{0}` has no total_relevant; average precision needs it")]
    MissingTotalRelevant(String),
    #[error("k must be at least 1")]
    InvalidK,
    #[error("empty confusion matrix")]
    EmptyMatrix,
    #[error("no truth judgment for corrected word `{original}` at t={t}, line {line_no}")]
    MissingJudgment { t: u32, line_no: usize, original: String },
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den > 0.0).then(|| num / den)
}

fn harmonic(p: Option<f64>, r: Option<f64>) -> Option<f64> {
    let (p, r) = (p?, r?);
    ratio(2.0 * p * r, p + r)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

/// Scores for the valid (`v`) and invalid (`iv`) classes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierMetrics {
    pub accuracy: Option<f64>,
    pub precision_v: Option<f64>,
    pub recall_v: Option<f64>,
    pub f1_v: Option<f64>,
    pub precision_iv: Option<f64>,
    pub recall_iv: Option<f64>,
    pub f1_iv: Option<f64>,
}

pub fn classifier_metrics(cm: &ConfusionMatrix) -> Result<ClassifierMetrics, EvalError> {
    let [tp, fp, fn_, tn] = [cm.tp, cm.fp, cm.fn_, cm.tn].map(|v| v as f64);
    if tp + fp + fn_ + tn == 0.0 {
        return Err(EvalError::EmptyMatrix);
    }
    let precision_v = ratio(tp, tp + fp);
    let recall_v = ratio(tp, tp + fn_);
    let precision_iv = ratio(tn, tn + fn_);
    let recall_iv = ratio(tn, tn + fp);
    Ok(ClassifierMetrics {
        accuracy: ratio(tp + tn, tp + fp + fn_ + tn),
        precision_v,
        recall_v,
        f1_v: harmonic(precision_v, recall_v),
        precision_iv,
        recall_iv,
        f1_iv: harmonic(precision_iv, recall_iv),
    })
}

/// Intersection over union; 0 when both boxes are empty.
pub fn iou(a: Rect, b: Rect) -> f64 {
    let ix = (a.x + a.w).min(b.x + b.w).saturating_sub(a.x.max(b.x));
    let iy = (a.y + a.h).min(b.y + b.h).saturating_sub(a.y.max(b.y));
    let inter = u64::from(ix) * u64::from(iy);
    let union = u64::from(a.w) * u64::from(a.h) + u64::from(b.w) * u64::from(b.h) - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Per-frame IoU where `None` means "invalid frame, no region": agreeing on
/// invalid scores 1, disagreeing on validity scores 0.
pub fn frame_iou(prediction: Option<Rect>, truth: Option<Rect>) -> f64 {
    match (prediction, truth) {
        (None, None) => 1.0,
        (Some(p), Some(t)) => iou(p, t),
        _ => 0.0,
    }
}

fn relevance_flags<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<bool>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Flag {
        Bool(bool),
        Int(u8),
    }
    let raw = Vec::<Flag>::deserialize(d)?;
    Ok(raw
        .into_iter()
        .map(|f| match f {
            Flag::Bool(b) => b,
            Flag::Int(i) => i != 0,
        })
        .collect())
}

/// Relevance of one query's returned list, best first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryJudgment {
    #[serde(deserialize_with = "relevance_flags")]
    pub relevance: Vec<bool>,
    #[serde(default)]
    pub total_relevant: Option<usize>,
}

/// Judgment file: query text to its judged list.
pub type RankedJudgments = BTreeMap<String, QueryJudgment>;

/// Entries beyond the list length count as not relevant.
fn rel_at(rel: &[bool], i: usize) -> bool {
    rel.get(i).copied().unwrap_or(false)
}

pub fn precision_at_k(rel: &[bool], k: usize) -> Result<f64, EvalError> {
    if k == 0 {
        return Err(EvalError::InvalidK);
    }
    Ok((0..k).filter(|&i| rel_at(rel, i)).count() as f64 / k as f64)
}

/// AP over the top `k`: `sum_j P(j) * rel(j) / total_relevant`.
pub fn average_precision(rel: &[bool], k: usize, total_relevant: usize) -> Result<Option<f64>, EvalError> {
    if k == 0 {
        return Err(EvalError::InvalidK);
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for i in 0..k {
        if rel_at(rel, i) {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    Ok(ratio(sum, total_relevant as f64))
}

pub fn reciprocal_rank(rel: &[bool], k: usize) -> Result<f64, EvalError> {
    if k == 0 {
        return Err(EvalError::InvalidK);
    }
    Ok((0..k)
        .find(|&i| rel_at(rel, i))
        .map_or(0.0, |i| 1.0 / (i + 1) as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryMetrics {
    pub precision: f64,
    pub average_precision: Option<f64>,
    pub reciprocal_rank: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalMetrics {
    pub k: usize,
    pub per_query: BTreeMap<String, QueryMetrics>,
    pub mean_precision: Option<f64>,
    /// `None` when some query's AP is undefined (zero relevant videos).
    pub map: Option<f64>,
    pub mrr: Option<f64>,
}

pub fn retrieval_metrics(judgments: &RankedJudgments, k: usize) -> Result<RetrievalMetrics, EvalError> {
    if k == 0 {
        return Err(EvalError::InvalidK);
    }
    let mut per_query = BTreeMap::new();
    for (q, j) in judgments {
        let total = j
            .total_relevant
            .ok_or_else(|| EvalError::MissingTotalRelevant(q.clone()))?;
        per_query.insert(
            q.clone(),
            QueryMetrics {
                precision: precision_at_k(&j.relevance, k)?,
                average_precision: average_precision(&j.relevance, k, total)?,
                reciprocal_rank: reciprocal_rank(&j.relevance, k)?,
            },
        );
    }
    let n = per_query.len() as f64;
    let mean = |f: &dyn Fn(&QueryMetrics) -> f64| ratio(per_query.values().map(f).sum(), n);
    let map = per_query
        .values()
        .map(|m| m.average_precision)
        .collect::<Option<Vec<f64>>>()
        .and_then(|aps| ratio(aps.iter().sum(), aps.len() as f64));
    Ok(RetrievalMetrics {
        k,
        mean_precision: mean(&|m| m.precision),
        mrr: mean(&|m| m.reciprocal_rank),
        map,
        per_query,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrectionCounts {
    pub all_incorrect: u64,
    pub corrected: u64,
    pub truly_corrected: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrectionAccuracies {
    /// truly corrected / all incorrect words
    pub accuracy1: Option<f64>,
    /// truly corrected / corrected words
    pub accuracy2: Option<f64>,
}

pub fn correction_accuracies(c: &CorrectionCounts) -> CorrectionAccuracies {
    CorrectionAccuracies {
        accuracy1: ratio(c.truly_corrected as f64, c.all_incorrect as f64),
        accuracy2: ratio(c.truly_corrected as f64, c.corrected as f64),
    }
}

/// Human verdict on one word-level correction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordJudgment {
    pub t: u32,
    pub line_no: usize,
    pub original: String,
    pub correct: bool,
}

/// Truth file for `correction_accuracies`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrectionTruth {
    pub all_incorrect: u64,
    pub judgments: Vec<WordJudgment>,
}

impl CorrectionCounts {
    /// Matches every word-level entry of the report against the truth file.
    pub fn from_report(report: &CorrectionReport, truth: &CorrectionTruth) -> Result<Self, EvalError> {
        let mut corrected = 0;
        let mut truly_corrected = 0;
        for (t, e) in report.entries().filter(|(_, e)| e.mechanism.is_word_level()) {
            let j = truth
                .judgments
                .iter()
                .find(|j| j.t == t && j.line_no == e.line_no && j.original == e.original)
                .ok_or_else(|| EvalError::MissingJudgment {
                    t,
                    line_no: e.line_no,
                    original: e.original.clone(),
                })?;
            corrected += 1;
            truly_corrected += u64::from(j.correct);
        }
        Ok(Self {
            all_incorrect: truth.all_incorrect,
            corrected,
            truly_corrected,
        })
    }
}
