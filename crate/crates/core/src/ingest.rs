//! Frame sampling: one frame per second, from a video file (through an
//! external decoder) or from a directory of pre-extracted `<t>.png` images.

use std::path::{Path, PathBuf};
use std::process::Command;

use image::{GrayImage, Luma, RgbImage};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Environment variable naming the decoder binary.
pub const DECODER_ENV: &str = "PSC2CODE_DECODER";
pub const DEFAULT_DECODER: &str = "ffmpeg";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read source {path}: {reason}")]
    SourceUnreadable { path: PathBuf, reason: String },
    #[error("decoder `{0}` is not available on PATH")]
    DecoderUnavailable(String),
    #[error("invalid manifest: {0}")]
    InvalidManifest(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VideoManifest {
    pub video_id: String,
    pub source: PathBuf,
    pub duration_s: u32,
    pub resolution: (u32, u32),
    #[serde(default)]
    pub title: String,
}

impl VideoManifest {
    pub fn validate(&self) -> Result<(), IngestError> {
        if self.video_id.is_empty() || self.video_id.contains(['/', '\\']) {
            return Err(IngestError::InvalidManifest(format!(
                "bad video id {:?}",
                self.video_id
            )));
        }
        if self.duration_s < 1 {
            return Err(IngestError::InvalidManifest("duration_s must be >= 1".into()));
        }
        if self.resolution.0 < 1 || self.resolution.1 < 1 {
            return Err(IngestError::InvalidManifest("empty resolution".into()));
        }
        Ok(())
    }

    /// Builds a manifest for a directory of pre-extracted frames, reading the
    /// resolution from the first frame and the duration from the last one.
    pub fn from_frame_dir(video_id: &str, dir: &Path) -> Result<Self, IngestError> {
        let files = list_frame_files(dir)?;
        let (first, last) = match (files.first(), files.last()) {
            (Some(f), Some(l)) => (f, l),
            _ => {
                return Err(IngestError::SourceUnreadable {
                    path: dir.to_path_buf(),
                    reason: "no <t>.png frames found".into(),
                })
            }
        };
        let (w, h) = image::image_dimensions(&first.1).map_err(|e| unreadable(&first.1, e))?;
        let title = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        Ok(Self {
            video_id: video_id.to_string(),
            source: dir.to_path_buf(),
            duration_s: last.0 + 1,
            resolution: (w, h),
            title,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameOrigin {
    Decoded,
    Preextracted,
}

/// One sampled second of video. Pixel buffers are immutable once built.
#[derive(Debug, Clone)]
pub struct Frame {
    pub t: u32,
    pub gray: GrayImage,
    pub color: RgbImage,
    pub origin: FrameOrigin,
}

impl Frame {
    pub fn new(t: u32, color: RgbImage, origin: FrameOrigin) -> Self {
        let gray = to_gray(&color);
        Self {
            t,
            gray,
            color,
            origin,
        }
    }

    pub fn dimensions(&self) -> (u32, u32) {
        self.gray.dimensions()
    }

    pub fn load(t: u32, path: &Path, origin: FrameOrigin) -> Result<Self, IngestError> {
        let img = image::open(path).map_err(|e| unreadable(path, e))?;
        Ok(Self::new(t, img.to_rgb8(), origin))
    }
}

/// Rec. 601 luma, rounded to the nearest integer.
pub fn to_gray(color: &RgbImage) -> GrayImage {
    let mut gray = GrayImage::new(color.width(), color.height());
    for (x, y, p) in color.enumerate_pixels() {
        let [r, g, b] = p.0;
        let v = 0.299 * f64::from(r) + 0.587 * f64::from(g) + 0.114 * f64::from(b);
        gray.put_pixel(x, y, Luma([v.round().min(255.0) as u8]));
    }
    gray
}

/// Which decoder binary to run for video sources.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decoder {
    pub program: String,
}

impl Default for Decoder {
    fn default() -> Self {
        Self {
            program: DEFAULT_DECODER.to_string(),
        }
    }
}

impl Decoder {
    pub fn new(program: impl Into<String>) -> Self {
        Self {
            program: program.into(),
        }
    }

    /// Explicit value, else `PSC2CODE_DECODER`, else `ffmpeg`.
    pub fn resolve(explicit: Option<&str>) -> Self {
        match explicit {
            Some(p) => Self::new(p),
            None => std::env::var(DECODER_ENV)
                .map(Self::new)
                .unwrap_or_default(),
        }
    }

    /// Decodes the first frame of every second of `video` into
    /// `out_dir/<t>.png`, returning the written `(t, path)` pairs.
    pub fn extract(
        &self,
        video: &Path,
        out_dir: &Path,
        duration_s: u32,
    ) -> Result<Vec<(u32, PathBuf)>, IngestError> {
        if !video.is_file() {
            return Err(IngestError::SourceUnreadable {
                path: video.to_path_buf(),
                reason: "not a file".into(),
            });
        }
        std::fs::create_dir_all(out_dir).map_err(|e| unreadable(out_dir, e))?;
        let pattern = out_dir.join("%d.png");
        let output = Command::new(&self.program)
            .args(["-hide_banner", "-loglevel", "error", "-nostdin", "-y", "-i"])
            .arg(video)
            .args([
                "-vf",
                "select='isnan(prev_selected_t)+gt(floor(t),floor(prev_selected_t))'",
                "-fps_mode",
                "vfr",
                "-start_number",
                "0",
            ])
            .arg(&pattern)
            .output()
            .map_err(|e| match e.kind() {
                std::io::ErrorKind::NotFound | std::io::ErrorKind::PermissionDenied => {
                    IngestError::DecoderUnavailable(self.program.clone())
                }
                _ => unreadable(video, e),
            })?;
        if !output.status.success() {
            return Err(IngestError::SourceUnreadable {
                path: video.to_path_buf(),
                reason: String::from_utf8_lossy(&output.stderr).trim().to_string(),
            });
        }
        // The select filter emits one image per second in order, so the
        // output index is the second offset.
        // a trailing partial second can yield one image past the end
        let mut files = list_frame_files(out_dir)?;
        files.retain(|(t, _)| *t < duration_s);
        Ok(files)
    }
}

/// Lists `<t>.png` files of a frame directory in ascending `t`.
pub fn list_frame_files(dir: &Path) -> Result<Vec<(u32, PathBuf)>, IngestError> {
    let entries = std::fs::read_dir(dir).map_err(|e| unreadable(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| unreadable(dir, e))?.path();
        let is_png = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("png"));
        let t = path
            .file_stem()
            .and_then(|s| s.to_str())
            .and_then(|s| s.parse::<u32>().ok());
        if let (true, Some(t)) = (is_png, t) {
            files.push((t, path));
        }
    }
    files.sort();
    files.dedup_by_key(|(t, _)| *t);
    Ok(files)
}

/// Samples the frames of a video, one per second, in ascending `t`.
///
/// Directory sources are read as-is; file sources go through `decoder`, which
/// writes into a scratch directory that is removed afterwards.
pub fn sample_frames(manifest: &VideoManifest, decoder: &Decoder) -> Result<Vec<Frame>, IngestError> {
    manifest.validate()?;
    let source = &manifest.source;
    if source.is_dir() {
        return list_frame_files(source)?
            .into_iter()
            .map(|(t, p)| Frame::load(t, &p, FrameOrigin::Preextracted))
            .collect();
    }
    let scratch = tempfile::tempdir().map_err(|e| unreadable(source, e))?;
    decoder
        .extract(source, scratch.path(), manifest.duration_s)?
        .into_iter()
        .map(|(t, p)| Frame::load(t, &p, FrameOrigin::Decoded))
        .collect()
}

fn unreadable(path: &Path, err: impl std::fmt::Display) -> IngestError {
    IngestError::SourceUnreadable {
        path: path.to_path_buf(),
        reason: err.to_string(),
    }
}
