//! Extraction, denoising and correction of source code shown in programming
//! screencasts.
//!
//! The pipeline runs in stages, each persisted to a per-video workspace:
//!
//! 1. [`ingest`] samples one frame per second from a video or frame directory.
//! 2. [`keyframes`] drops near-duplicate consecutive frames (NRMSE).
//! 3. [`classify`] separates valid code frames from slides, browsers and
//!    editors blocked by popups.
//! 4. [`layout`] finds sub-window boundaries and crops the code editor.
//! 5. [`ocr`] turns the cropped editor into positioned words and code lines.
//! 6. [`correct`] repairs OCR errors with a code language model ([`codelm`])
//!    and cross-frame evidence.
//!
//! On top of the extracted code, [`search`] ranks videos by TF-IDF and
//! [`workflow`] rebuilds the files and the edit/switch timeline of a tutorial.
//! [`eval`] holds the metrics used to score each of these steps.

pub mod classify;
pub mod codelm;
pub mod config;
pub mod correct;
pub mod dbscan;
pub mod eval;
pub mod ingest;
pub mod keyframes;
pub mod layout;
pub mod ocr;
pub mod pipeline;
pub mod search;
pub mod text;
pub mod workflow;
pub mod workspace;

pub use config::PipelineConfig;
pub use ingest::{Frame, VideoManifest};
pub use workspace::Workspace;
