//! Pipeline configuration and its TOML file form.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::ClassifierConfig;
use crate::correct::CorrectionConfig;
use crate::keyframes::DEFAULT_THRESHOLD;
use crate::layout::LayoutConfig;
use crate::search::IdfVariant;
use crate::workflow::DEFAULT_FILE_EPS;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {reason}")]
    Read { path: PathBuf, reason: String },
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("cannot serialise config: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OcrBackendKind {
    /// Stored responses, `<fixture_dir>/<t>.json`.
    #[default]
    Fixture,
    /// Google-Vision-compatible HTTP endpoint.
    Remote,
    /// Local tesseract binary.
    Local,
}

impl std::str::FromStr for OcrBackendKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fixture" => Ok(Self::Fixture),
            "remote" => Ok(Self::Remote),
            "local" => Ok(Self::Local),
            other => Err(format!("unknown OCR backend `{other}` (fixture, remote, local)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct OcrConfig {
    pub backend: OcrBackendKind,
    pub fixture_dir: Option<PathBuf>,
    pub endpoint: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KeyframeConfig {
    pub threshold: f64,
}

impl Default for KeyframeConfig {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorkflowConfig {
    pub file_eps: f64,
}

impl Default for WorkflowConfig {
    fn default() -> Self {
        Self {
            file_eps: DEFAULT_FILE_EPS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    pub idf: IdfVariant,
}

/// Every tunable of the pipeline. Missing keys take their defaults, so a
/// config file only needs the values it changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub workspace: PathBuf,
    /// Code language model built by `build-model`.
    pub model: Option<PathBuf>,
    pub decoder: Option<String>,
    pub keyframes: KeyframeConfig,
    pub classifier: ClassifierConfig,
    pub layout: LayoutConfig,
    pub ocr: OcrConfig,
    pub correction: CorrectionConfig,
    pub workflow: WorkflowConfig,
    pub search: SearchConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            workspace: PathBuf::from("workspace"),
            model: None,
            decoder: None,
            keyframes: KeyframeConfig::default(),
            classifier: ClassifierConfig::default(),
            layout: LayoutConfig::default(),
            ocr: OcrConfig::default(),
            correction: CorrectionConfig::default(),
            workflow: WorkflowConfig::default(),
            search: SearchConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String, ConfigError> {
        Ok(toml::to_string_pretty(self)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let t = self.keyframes.threshold;
        if !(0.0..=1.0).contains(&t) {
            return Err(ConfigError::Invalid(format!("keyframe threshold {t} outside [0, 1]")));
        }
        if !(0.0..=1.0).contains(&self.workflow.file_eps) {
            return Err(ConfigError::Invalid("workflow.file_eps outside [0, 1]".into()));
        }
        if self.layout.min_line_length == 0 {
            return Err(ConfigError::Invalid("layout.min_line_length must be positive".into()));
        }
        self.classifier
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }
}
