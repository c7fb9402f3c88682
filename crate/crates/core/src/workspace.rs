//! On-disk artifact layout, one directory per video:
//!
//! ```text
//! <root>/<video_id>/manifest.json
//!                   frames/<t>.png
//!                   informative.json
//!                   classified.json
//!                   regions.json
//!                   ocr/<t>.json
//!                   code/<t>.txt
//!                   correction_report.json
//!                   document.txt
//!                   workflow.json
//! <root>/index.json
//! ```

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, MutexGuard};

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

use crate::ingest::VideoManifest;

pub const MANIFEST: &str = "manifest.json";
pub const FRAMES_DIR: &str = "frames";
pub const INFORMATIVE: &str = "informative.json";
pub const CLASSIFIED: &str = "classified.json";
pub const REGIONS: &str = "regions.json";
pub const OCR_DIR: &str = "ocr";
pub const CODE_DIR: &str = "code";
pub const CORRECTION_REPORT: &str = "correction_report.json";
pub const DOCUMENT: &str = "document.txt";
pub const WORKFLOW: &str = "workflow.json";
pub const CONFIG_STAMP: &str = "config.toml";
pub const INDEX: &str = "index.json";

#[derive(Debug, Error)]
pub enum WorkspaceError {
    #[error("permission denied for workspace {path}: {reason}")]
    PermissionDenied { path: PathBuf, reason: String },
    #[error("unknown video `{0}`")]
    UnknownVideo(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed artifact {path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
}

type Result<T> = std::result::Result<T, WorkspaceError>;

/// Handle over a workspace root. Cheap to clone; clones share the per-video
/// write locks.
#[derive(Debug, Clone)]
pub struct Workspace {
    root: PathBuf,
    locks: Arc<Mutex<HashMap<String, Arc<Mutex<()>>>>>,
}

impl Workspace {
    /// Opens (creating if needed) a workspace rooted at `root`.
    pub fn open(root: impl AsRef<Path>) -> Result<Self> {
        let root = root.as_ref();
        if root.exists() && !root.is_dir() {
            return Err(WorkspaceError::PermissionDenied {
                path: root.to_path_buf(),
                reason: "not a directory".into(),
            });
        }
        std::fs::create_dir_all(root).map_err(|e| WorkspaceError::PermissionDenied {
            path: root.to_path_buf(),
            reason: e.to_string(),
        })?;
        Ok(Self {
            root: root.to_path_buf(),
            locks: Arc::default(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Ids of all video directories, sorted.
    pub fn videos(&self) -> Result<Vec<String>> {
        let entries = std::fs::read_dir(&self.root).map_err(|e| self.io(&self.root, e))?;
        let mut ids = Vec::new();
        for entry in entries {
            let entry = entry.map_err(|e| self.io(&self.root, e))?;
            if entry.path().is_dir() {
                ids.push(entry.file_name().to_string_lossy().into_owned());
            }
        }
        ids.sort();
        Ok(ids)
    }

    pub fn video_dir(&self, video_id: &str) -> PathBuf {
        self.root.join(video_id)
    }

    pub fn path(&self, video_id: &str, rel: impl AsRef<Path>) -> PathBuf {
        self.video_dir(video_id).join(rel)
    }

    pub fn has_video(&self, video_id: &str) -> bool {
        self.video_dir(video_id).is_dir()
    }

    /// Serialises writes for one video across all clones of this handle.
    pub fn lock(&self, video_id: &str) -> VideoLock {
        let slot = {
            let mut map = self.locks.lock().unwrap_or_else(|e| e.into_inner());
            map.entry(video_id.to_string()).or_default().clone()
        };
        VideoLock { slot }
    }

    pub fn create_video(&self, manifest: &VideoManifest) -> Result<()> {
        let dir = self.video_dir(&manifest.video_id);
        for sub in [FRAMES_DIR, OCR_DIR, CODE_DIR] {
            std::fs::create_dir_all(dir.join(sub)).map_err(|e| self.io(&dir, e))?;
        }
        self.write_json(&manifest.video_id, MANIFEST, manifest)
    }

    pub fn manifest(&self, video_id: &str) -> Result<VideoManifest> {
        if !self.has_video(video_id) {
            return Err(WorkspaceError::UnknownVideo(video_id.to_string()));
        }
        self.read_json(video_id, MANIFEST)
    }

    pub fn exists(&self, video_id: &str, rel: impl AsRef<Path>) -> bool {
        self.path(video_id, rel).exists()
    }

    pub fn write_json<T: Serialize + ?Sized>(
        &self,
        video_id: &str,
        rel: impl AsRef<Path>,
        value: &T,
    ) -> Result<()> {
        let path = self.path(video_id, rel);
        write_json_file(&path, value)
    }

    pub fn read_json<T: DeserializeOwned>(&self, video_id: &str, rel: impl AsRef<Path>) -> Result<T> {
        read_json_file(&self.path(video_id, rel))
    }

    pub fn write_text(&self, video_id: &str, rel: impl AsRef<Path>, text: &str) -> Result<()> {
        let path = self.path(video_id, rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| self.io(parent, e))?;
        }
        std::fs::write(&path, text).map_err(|e| self.io(&path, e))
    }

    pub fn read_text(&self, video_id: &str, rel: impl AsRef<Path>) -> Result<String> {
        let path = self.path(video_id, rel);
        std::fs::read_to_string(&path).map_err(|e| self.io(&path, e))
    }

    pub fn remove(&self, video_id: &str, rel: impl AsRef<Path>) -> Result<()> {
        let path = self.path(video_id, rel);
        let res = if path.is_dir() {
            std::fs::remove_dir_all(&path)
        } else {
            std::fs::remove_file(&path)
        };
        match res {
            Err(e) if e.kind() != std::io::ErrorKind::NotFound => Err(self.io(&path, e)),
            _ => Ok(()),
        }
    }

    /// `(t, path)` of every file `<t>.<ext>` under `rel`, ascending in `t`.
    pub fn timed_files(&self, video_id: &str, rel: &str, ext: &str) -> Result<Vec<(u32, PathBuf)>> {
        let dir = self.path(video_id, rel);
        if !dir.is_dir() {
            return Ok(Vec::new());
        }
        let mut out = Vec::new();
        for entry in std::fs::read_dir(&dir).map_err(|e| self.io(&dir, e))? {
            let path = entry.map_err(|e| self.io(&dir, e))?.path();
            if path.extension().and_then(|e| e.to_str()) != Some(ext) {
                continue;
            }
            if let Some(t) = path
                .file_stem()
                .and_then(|s| s.to_str())
                .and_then(|s| s.parse::<u32>().ok())
            {
                out.push((t, path));
            }
        }
        out.sort();
        Ok(out)
    }

    fn io(&self, path: &Path, source: std::io::Error) -> WorkspaceError {
        WorkspaceError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Guard returned by [`Workspace::lock`].
pub struct VideoLock {
    slot: Arc<Mutex<()>>,
}

impl VideoLock {
    pub fn guard(&self) -> MutexGuard<'_, ()> {
        self.slot.lock().unwrap_or_else(|e| e.into_inner())
    }
}

pub fn write_json_file<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| WorkspaceError::Io {
            path: parent.to_path_buf(),
            source: e,
        })?;
    }
    let body = serde_json::to_vec_pretty(value).map_err(|e| WorkspaceError::Json {
        path: path.to_path_buf(),
        source: e,
    })?;
    std::fs::write(path, body).map_err(|e| WorkspaceError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

pub fn read_json_file<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let body = std::fs::read(path).map_err(|e| WorkspaceError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    serde_json::from_slice(&body).map_err(|e| WorkspaceError::Json {
        path: path.to_path_buf(),
        source: e,
    })
}
