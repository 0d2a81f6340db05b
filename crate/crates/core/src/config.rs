//! The pipeline configuration file.
//!
//! One TOML document drives every stage. All tables are optional and fall
//! back to their defaults; only `version` is required. A documented sample
//! lives in `kelly-strata.example.toml` at the repository root.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::betting::{BookSelection, DEFAULT_THRESHOLDS};
use crate::error::{Error, Result};
use crate::evaluation::ProtocolConfig;
use crate::features::FeatureConfig;
use crate::ingest::{ColumnSchema, SynthConfig};
use crate::kelly::KellyRule;
use crate::ratings::RatingsConfig;

/// Version of the configuration layout this build understands.
pub const CONFIG_VERSION: u32 = 1;

/// Where the matches come from.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Season CSV files, or directories whose `*.csv` files are all read.
    pub paths: Vec<PathBuf>,
    /// Generate a synthetic league instead of reading files.
    pub synthetic: Option<SynthConfig>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KellyConfig {
    pub rule: KellyRule,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BettingConfig {
    /// Book used for the threshold sweep.
    pub book: BookSelection,
    pub thresholds: Vec<f64>,
}

impl Default for BettingConfig {
    fn default() -> Self {
        Self {
            book: BookSelection::default(),
            thresholds: DEFAULT_THRESHOLDS.to_vec(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub version: u32,
    /// Master seed; overrides `protocol.seed`.
    pub seed: u64,
    /// Relative to the configuration file's directory.
    pub output_dir: PathBuf,
    pub data: DataConfig,
    pub schema: ColumnSchema,
    pub ratings: RatingsConfig,
    pub features: FeatureConfig,
    pub kelly: KellyConfig,
    pub protocol: ProtocolConfig,
    pub betting: BettingConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            seed: 42,
            output_dir: PathBuf::from("kelly-strata-out"),
            data: DataConfig::default(),
            schema: ColumnSchema::default(),
            ratings: RatingsConfig::default(),
            features: FeatureConfig::default(),
            kelly: KellyConfig::default(),
            protocol: ProtocolConfig::default(),
            betting: BettingConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: toml::Table = text.parse().map_err(|e| Error::Config(format!("{e}")))?;
        match raw.get("version").and_then(|v| v.as_integer()) {
            Some(v) if v == i64::from(CONFIG_VERSION) => {}
            Some(v) => {
                return Err(Error::Config(format!(
                    "unsupported config version {v} (expected {CONFIG_VERSION})"
                )))
            }
            None => return Err(Error::Config("missing integer `version`".into())),
        }
        let mut cfg: PipelineConfig = toml::from_str(text).map_err(|e| Error::Config(format!("{e}")))?;
        cfg.protocol.seed = cfg.seed;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads `path`; relative data and output paths are resolved against
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.rebase(base);
        Ok(cfg)
    }

    pub fn rebase(&mut self, base: &Path) {
        for p in &mut self.data.paths {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if self.output_dir.is_relative() {
            self.output_dir = base.join(&self.output_dir);
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(format!("{e}")))
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::Config(format!("unsupported config version {}", self.version)));
        }
        if self.features.min_prior_matches == 0 {
            return Err(Error::Config("features.min_prior_matches must be positive".into()));
        }
        if self.betting.thresholds.is_empty() {
            return Err(Error::Config("betting.thresholds must not be empty".into()));
        }
        for &t in &self.betting.thresholds {
            if !(1.0 / 3.0..=1.0).contains(&t) {
                return Err(Error::Config(format!("betting threshold {t} outside [1/3, 1]")));
            }
        }
        if let Some(s) = &self.data.synthetic {
            if s.team_count < 4 || s.team_count % 2 == 1 || s.seasons == 0 {
                return Err(Error::Config("data.synthetic needs an even team_count >= 4 and seasons >= 1".into()));
            }
        }
        self.protocol.validate()
    }

    /// SHA-256 of the canonical JSON rendering, independent of formatting
    /// and key order in the source file. The output directory is excluded
    /// so relocating results does not change the hash.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = PathBuf::new();
        let json = serde_json::to_string(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}
