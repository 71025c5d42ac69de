//! TOML pipeline configuration. Missing keys take defaults, unknown keys
//! are errors.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fuzz::FuzzConfig;
use crate::llm::LlmConfig;
use crate::sim::SimConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LstarConfig {
    /// Random words per equivalence query.
    pub eq_budget: usize,
    pub max_rounds: usize,
    pub max_word_len: usize,
    pub rng_seed: u64,
    /// Event kinds in the learning alphabet; empty means all.
    pub event_kinds: Vec<String>,
}

impl Default for LstarConfig {
    fn default() -> Self {
        LstarConfig {
            eq_budget: 2000,
            max_rounds: 25,
            max_word_len: 20,
            rng_seed: 0,
            event_kinds: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SatConfig {
    /// Largest formula (DAG nodes) the learner tries.
    pub max_size: usize,
}

impl Default for SatConfig {
    fn default() -> Self {
        SatConfig { max_size: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub simulator: SimConfig,
    pub lstar: LstarConfig,
    pub sat: SatConfig,
    pub fuzz: FuzzConfig,
    pub llm: LlmConfig,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: "<config>".into(),
            message: e.message().to_string(),
        })?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text).map_err(|e| match e {
            ConfigError::Parse { message, .. } => ConfigError::Parse {
                path: path.display().to_string(),
                message,
            },
            e => e,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Seeds every randomized stage.
    pub fn set_rng_seed(&mut self, seed: u64) {
        self.lstar.rng_seed = seed;
        self.fuzz.rng_seed = seed;
    }

    pub fn check(&self) -> Result<(), ConfigError> {
        self.simulator
            .check()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.fuzz
            .check()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.lstar.max_rounds == 0 {
            return Err(ConfigError::Invalid("lstar.max_rounds must be at least 1".into()));
        }
        Ok(())
    }
}
