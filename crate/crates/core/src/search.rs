//! TF-IDF search over the corrected code of whole videos.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codelm::{tokenize_line, TokenKind};
use crate::ocr::CodeSnapshot;
use crate::workspace::{Workspace, WorkspaceError, CODE_DIR};

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("no video with corrected code to index")]
    EmptyCorpus,
    #[error("query has no searchable tokens")]
    EmptyQuery,
    #[error(transparent)]
    Workspace(#[from] WorkspaceError),
}

/// Lower-cased tokens of a code line, as indexed.
pub fn index_tokens(line: &str) -> impl Iterator<Item = String> {
    tokenize_line(line).into_iter().map(|t| t.text.to_lowercase())
}

/// Query keywords: lower-cased, punctuation dropped, first occurrence kept.
pub fn query_tokens(q: &str) -> Vec<String> {
    let mut seen = BTreeSet::new();
    tokenize_line(q)
        .into_iter()
        .filter(|t| t.kind != TokenKind::Punct)
        .map(|t| t.text.to_lowercase())
        .filter(|t| seen.insert(t.clone()))
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VideoDocument {
    pub video_id: String,
    /// Raw count over every frame's lines.
    pub tokens: BTreeMap<String, u64>,
    pub frame_postings: BTreeMap<String, Vec<u32>>,
}

impl VideoDocument {
    pub fn from_snapshots(video_id: &str, snapshots: &[CodeSnapshot]) -> Self {
        let mut doc = VideoDocument {
            video_id: video_id.to_string(),
            ..Default::default()
        };
        let mut ordered: Vec<&CodeSnapshot> = snapshots.iter().collect();
        ordered.sort_by_key(|s| s.t);
        for snap in ordered {
            for line in &snap.lines {
                for tok in index_tokens(line) {
                    *doc.tokens.entry(tok.clone()).or_default() += 1;
                    let posting = doc.frame_postings.entry(tok).or_default();
                    if posting.last() != Some(&snap.t) {
                        posting.push(snap.t);
                    }
                }
            }
        }
        doc
    }

    /// Frames containing at least one of the query keywords.
    pub fn frames_matching(&self, q: &str) -> Result<Vec<u32>, SearchError> {
        let tokens = query_tokens(q);
        if tokens.is_empty() {
            return Err(SearchError::EmptyQuery);
        }
        let frames: BTreeSet<u32> = tokens
            .iter()
            .filter_map(|t| self.frame_postings.get(t))
            .flatten()
            .copied()
            .collect();
        Ok(frames.into_iter().collect())
    }
}

/// How document frequency is turned into a weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdfVariant {
    /// `ln(n / (1 + df)) + 1`
    #[default]
    Smooth,
    /// `ln(n / df)`; a token present in every video weighs nothing.
    Plain,
}

impl IdfVariant {
    pub fn weight(self, n: usize, df: u64) -> f64 {
        match self {
            Self::Smooth => idf(n, df),
            Self::Plain => (n as f64 / df as f64).ln(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchIndex {
    pub documents: Vec<VideoDocument>,
    pub df: BTreeMap<String, u64>,
    pub n: usize,
    #[serde(default)]
    pub variant: IdfVariant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchHit {
    pub video_id: String,
    pub score: f64,
    pub matched_frames: Vec<u32>,
    /// Some frame of this video contains every query keyword.
    pub all_in_one_frame: bool,
}

/// Smoothed inverse document frequency, always positive.
pub fn idf(n: usize, df: u64) -> f64 {
    (n as f64 / (1.0 + df as f64)).ln() + 1.0
}

impl SearchIndex {
    pub fn build(documents: Vec<VideoDocument>) -> Result<Self, SearchError> {
        Self::build_with(documents, IdfVariant::default())
    }

    pub fn build_with(documents: Vec<VideoDocument>, variant: IdfVariant) -> Result<Self, SearchError> {
        if documents.is_empty() {
            return Err(SearchError::EmptyCorpus);
        }
        let mut df: BTreeMap<String, u64> = BTreeMap::new();
        for doc in &documents {
            for tok in doc.tokens.keys() {
                *df.entry(tok.clone()).or_default() += 1;
            }
        }
        let n = documents.len();
        Ok(Self { documents, df, n, variant })
    }

    pub fn idf(&self, token: &str) -> Option<f64> {
        self.df.get(token).map(|&df| self.variant.weight(self.n, df))
    }

    pub fn tf_idf(&self, token: &str, doc: &VideoDocument) -> f64 {
        match (doc.tokens.get(token), self.idf(token)) {
            (Some(&tf), Some(idf)) => tf as f64 * idf,
            _ => 0.0,
        }
    }

    pub fn document(&self, video_id: &str) -> Option<&VideoDocument> {
        self.documents.iter().find(|d| d.video_id == video_id)
    }

    /// Ranks videos by the summed TF-IDF of the query keywords they contain.
    pub fn query(&self, q: &str, k: usize) -> Result<Vec<SearchHit>, SearchError> {
        let tokens = query_tokens(q);
        if tokens.is_empty() {
            return Err(SearchError::EmptyQuery);
        }
        let mut hits: Vec<SearchHit> = self
            .documents
            .iter()
            .filter_map(|doc| {
                let matched: Vec<&String> = tokens.iter().filter(|t| doc.tokens.contains_key(*t)).collect();
                let score: f64 = matched.iter().map(|t| self.tf_idf(t, doc)).sum();
                if score <= 0.0 {
                    return None;
                }
                let frames: BTreeSet<u32> = matched
                    .iter()
                    .flat_map(|t| doc.frame_postings[*t].iter().copied())
                    .collect();
                let all_in_one_frame = matched.len() == tokens.len()
                    && frames.iter().any(|f| {
                        tokens
                            .iter()
                            .all(|t| doc.frame_postings[t].binary_search(f).is_ok())
                    });
                Some(SearchHit {
                    video_id: doc.video_id.clone(),
                    score,
                    matched_frames: frames.into_iter().collect(),
                    all_in_one_frame,
                })
            })
            .collect();
        hits.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.video_id.cmp(&b.video_id)));
        hits.truncate(k);
        Ok(hits)
    }
}

/// Reads `code/<t>.txt` of one video.
pub fn load_snapshots(ws: &Workspace, video_id: &str) -> Result<Vec<CodeSnapshot>, WorkspaceError> {
    ws.timed_files(video_id, CODE_DIR, "txt")?
        .into_iter()
        .map(|(t, path)| {
            std::fs::read_to_string(&path)
                .map(|text| CodeSnapshot::from_text(t, &text))
                .map_err(|source| WorkspaceError::Io { path, source })
        })
        .collect()
}

/// Indexes every video of the workspace that has corrected code.
pub fn build_index(ws: &Workspace, variant: IdfVariant) -> Result<SearchIndex, SearchError> {
    let mut docs = Vec::new();
    for id in ws.videos()? {
        let snaps = load_snapshots(ws, &id)?;
        if !snaps.is_empty() {
            docs.push(VideoDocument::from_snapshots(&id, &snaps));
        }
    }
    SearchIndex::build_with(docs, variant)
}
