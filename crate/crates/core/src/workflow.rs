//! Workflow reconstruction: which file each frame shows, what the file looked
//! like over time, and the edit/switch actions between adjacent valid frames.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codelm::{tokenize_line, TokenKind};
use crate::dbscan::{dbscan, groups};
use crate::ocr::CodeSnapshot;
use crate::text::{lcs_len, lcs_pairs};

pub const DEFAULT_FILE_EPS: f64 = 0.3;

/// Lines compared for clustering: trimmed, blank lines dropped.
fn comparable(s: &CodeSnapshot) -> Vec<&str> {
    s.lines.iter().map(|l| l.trim()).filter(|l| !l.is_empty()).collect()
}

/// `1 - LCS(a, b) / max(LOC(a), LOC(b))` over whole lines.
pub fn frame_dissimilarity(a: &CodeSnapshot, b: &CodeSnapshot) -> f64 {
    let (la, lb) = (comparable(a), comparable(b));
    let longest = la.len().max(lb.len());
    if longest == 0 {
        return 0.0;
    }
    1.0 - lcs_len(&la, &lb) as f64 / longest as f64
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameContent {
    pub t: u32,
    pub lines: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileCluster {
    pub file_id: usize,
    pub name: String,
    pub member_frames: Vec<u32>,
    /// Cumulative file content as known at each member frame.
    pub content_by_time: Vec<FrameContent>,
}

/// Merges a newer view of a file into the accumulated content. Lines are
/// aligned by LCS over trimmed text; wherever the views disagree the newer one
/// wins, and accumulated lines above or below the newer view's extent are
/// kept (they scrolled out of view).
pub fn merge_content(acc: &[String], new: &[String]) -> Vec<String> {
    let ka: Vec<&str> = acc.iter().map(|l| l.trim()).collect();
    let kb: Vec<&str> = new.iter().map(|l| l.trim()).collect();
    let pairs = lcs_pairs(&ka, &kb);
    let (Some(&(a0, b0)), Some(&(a1, b1))) = (pairs.first(), pairs.last()) else {
        return new.to_vec();
    };
    let mut out = Vec::with_capacity(acc.len().max(new.len()));
    if b0 == 0 {
        out.extend_from_slice(&acc[..a0]);
    } else {
        out.extend_from_slice(&new[..b0]);
    }
    out.extend_from_slice(&new[b0..=b1]);
    if b1 + 1 == new.len() {
        out.extend_from_slice(&acc[a1 + 1..]);
    } else {
        out.extend_from_slice(&new[b1 + 1..]);
    }
    out
}

/// Most frequent `X` in `class X` among the lines, ties by name.
fn class_name<'a>(lines: impl Iterator<Item = &'a String>) -> Option<String> {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for line in lines {
        let tokens = tokenize_line(line);
        for w in tokens.windows(2) {
            if w[0].kind == TokenKind::Keyword && w[0].text == "class" && w[1].kind == TokenKind::IdentUpper {
                *counts.entry(w[1].text.clone()).or_default() += 1;
            }
        }
    }
    // BTreeMap iterates names ascending, so max_by_key keeps the last
    // maximum; reverse to prefer the first name
    counts
        .into_iter()
        .rev()
        .max_by_key(|(_, n)| *n)
        .map(|(name, _)| name)
}

/// Clusters the snapshots of one video into files.
pub fn cluster_files(snapshots: &[CodeSnapshot], eps: f64) -> Vec<FileCluster> {
    let mut order: Vec<usize> = (0..snapshots.len()).collect();
    order.sort_by_key(|&i| snapshots[i].t);
    let sorted: Vec<&CodeSnapshot> = order.iter().map(|&i| &snapshots[i]).collect();
    let labels = dbscan(sorted.len(), eps, 1, |a, b| frame_dissimilarity(sorted[a], sorted[b]));

    let mut used: HashSet<String> = HashSet::new();
    groups(&labels)
        .into_iter()
        .enumerate()
        .map(|(file_id, members)| {
            let base = class_name(members.iter().flat_map(|&i| sorted[i].lines.iter()))
                .unwrap_or_else(|| format!("file{}", file_id + 1));
            let mut name = base.clone();
            let mut n = 2;
            while !used.insert(name.clone()) {
                name = format!("{base}_{n}");
                n += 1;
            }
            let mut content_by_time = Vec::with_capacity(members.len());
            let mut acc: Vec<String> = Vec::new();
            for (k, &i) in members.iter().enumerate() {
                acc = if k == 0 {
                    sorted[i].lines.clone()
                } else {
                    merge_content(&acc, &sorted[i].lines)
                };
                content_by_time.push(FrameContent {
                    t: sorted[i].t,
                    lines: acc.clone(),
                });
            }
            FileCluster {
                file_id,
                name,
                member_frames: members.iter().map(|&i| sorted[i].t).collect(),
                content_by_time,
            }
        })
        .collect()
}

/// One replaced block: `removed` lines at `old_start` of the old text become
/// `added` lines at `new_start` of the new text (0-based).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hunk {
    pub old_start: usize,
    pub new_start: usize,
    pub removed: Vec<String>,
    pub added: Vec<String>,
}

/// Line diff from the LCS alignment of exact lines.
pub fn diff_lines(old: &[String], new: &[String]) -> Vec<Hunk> {
    let mut pairs = lcs_pairs(old, new);
    pairs.push((old.len(), new.len()));
    let mut hunks = Vec::new();
    let (mut i, mut j) = (0, 0);
    for (a, b) in pairs {
        if a > i || b > j {
            hunks.push(Hunk {
                old_start: i,
                new_start: j,
                removed: old[i..a].to_vec(),
                added: new[j..b].to_vec(),
            });
        }
        i = a + 1;
        j = b + 1;
    }
    hunks
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DiffError {
    #[error("hunk at old line {0} does not match the text")]
    Mismatch(usize),
}

pub fn apply_diff(old: &[String], hunks: &[Hunk]) -> Result<Vec<String>, DiffError> {
    let mut out = Vec::with_capacity(old.len());
    let mut i = 0;
    for h in hunks {
        let end = h.old_start + h.removed.len();
        if h.old_start < i || end > old.len() || old[h.old_start..end] != h.removed[..] {
            return Err(DiffError::Mismatch(h.old_start));
        }
        out.extend_from_slice(&old[i..h.old_start]);
        out.extend_from_slice(&h.added);
        i = end;
    }
    out.extend_from_slice(&old[i..]);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Action {
    Edit {
        file_id: usize,
        inserted: usize,
        deleted: usize,
        hunks: Vec<Hunk>,
    },
    Switch {
        from_file: usize,
        to_file: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimelineAction {
    pub t: u32,
    #[serde(flatten)]
    pub action: Action,
}

fn edit(t: u32, file_id: usize, old: &[String], new: &[String]) -> TimelineAction {
    let hunks = diff_lines(old, new);
    TimelineAction {
        t,
        action: Action::Edit {
            file_id,
            inserted: hunks.iter().map(|h| h.added.len()).sum(),
            deleted: hunks.iter().map(|h| h.removed.len()).sum(),
            hunks,
        },
    }
}

/// Walks adjacent valid frames. A change of file is a switch; a file whose
/// text differs from its previous frame gets an edit diffed against that
/// frame, so replaying a file's edits reproduces its last snapshot even when
/// other files were shown in between.
pub fn build_timeline(snapshots: &[CodeSnapshot], clusters: &[FileCluster]) -> Vec<TimelineAction> {
    let file_of: HashMap<u32, usize> = clusters
        .iter()
        .flat_map(|c| c.member_frames.iter().map(move |&t| (t, c.file_id)))
        .collect();
    let mut ordered: Vec<&CodeSnapshot> = snapshots.iter().filter(|s| file_of.contains_key(&s.t)).collect();
    ordered.sort_by_key(|s| s.t);

    let mut last_of: HashMap<usize, &CodeSnapshot> = HashMap::new();
    let mut prev_file = None;
    let mut actions = Vec::new();
    for snap in ordered {
        let file = file_of[&snap.t];
        if let Some(from) = prev_file.filter(|&f| f != file) {
            actions.push(TimelineAction {
                t: snap.t,
                action: Action::Switch { from_file: from, to_file: file },
            });
        }
        if let Some(base) = last_of.get(&file) {
            if base.lines != snap.lines {
                actions.push(edit(snap.t, file, &base.lines, &snap.lines));
            }
        }
        last_of.insert(file, snap);
        prev_file = Some(file);
    }
    actions
}

/// Body of `workflow.json`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Workflow {
    pub files: Vec<FileCluster>,
    pub timeline: Vec<TimelineAction>,
}

pub fn reconstruct_workflow(snapshots: &[CodeSnapshot], eps: f64) -> Workflow {
    let files = cluster_files(snapshots, eps);
    let timeline = build_timeline(snapshots, &files);
    Workflow { files, timeline }
}
