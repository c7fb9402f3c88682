//! In-memory view of a workspace, loaded once and served read-only.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use psc2code_core::classify::FrameVerdict;
use psc2code_core::keyframes::InformativeSet;
use psc2code_core::ocr::CodeSnapshot;
use psc2code_core::search::{load_snapshots, IdfVariant, SearchIndex, VideoDocument};
use psc2code_core::workflow::Workflow;
use psc2code_core::workspace::{self, read_json_file, Workspace};
use psc2code_core::VideoManifest;

/// Everything the API needs about one processed video. Artifacts of stages
/// that have not run yet are absent rather than errors.
#[derive(Debug, Clone)]
pub struct VideoView {
    pub manifest: VideoManifest,
    pub informative: Option<InformativeSet>,
    pub verdicts: Vec<FrameVerdict>,
    pub workflow: Option<Workflow>,
    pub code: BTreeMap<u32, CodeSnapshot>,
    pub document: VideoDocument,
}

#[derive(Debug, Clone, Default)]
pub struct WorkspaceSnapshot {
    pub root: PathBuf,
    pub videos: BTreeMap<String, VideoView>,
    /// `index.json` at the root if present, else built in memory.
    pub index: Option<SearchIndex>,
}

fn optional<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Option<T>> {
    if !path.exists() {
        return Ok(None);
    }
    read_json_file(path)
        .map(Some)
        .with_context(|| format!("reading {}", path.display()))
}

impl WorkspaceSnapshot {
    /// Reads the workspace without writing to it. The root must already exist.
    pub fn load(root: &Path) -> Result<Self> {
        if !root.is_dir() {
            bail!("workspace {} does not exist", root.display());
        }
        let ws = Workspace::open(root)?;
        let mut videos = BTreeMap::new();
        for id in ws.videos()? {
            // directories without a manifest are not videos
            if !ws.exists(&id, workspace::MANIFEST) {
                continue;
            }
            let manifest: VideoManifest = ws.read_json(&id, workspace::MANIFEST)?;
            let informative = optional(&ws.path(&id, workspace::INFORMATIVE))?;
            let verdicts = optional(&ws.path(&id, workspace::CLASSIFIED))?.unwrap_or_default();
            let workflow = optional(&ws.path(&id, workspace::WORKFLOW))?;
            let snaps = load_snapshots(&ws, &id)?;
            let document = VideoDocument::from_snapshots(&id, &snaps);
            let code = snaps.into_iter().map(|s| (s.t, s)).collect();
            videos.insert(
                id,
                VideoView {
                    manifest,
                    informative,
                    verdicts,
                    workflow,
                    code,
                    document,
                },
            );
        }
        let index = match optional::<SearchIndex>(&root.join(workspace::INDEX))? {
            Some(index) => Some(index),
            None => {
                let docs: Vec<VideoDocument> = videos
                    .values()
                    .filter(|v| !v.code.is_empty())
                    .map(|v| v.document.clone())
                    .collect();
                SearchIndex::build_with(docs, IdfVariant::default()).ok()
            }
        };
        Ok(Self {
            root: root.to_path_buf(),
            videos,
            index,
        })
    }
}
