//! Configuration: TOML file plus command-line overrides, validated before
//! any pipeline stage runs. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use qadoc_core::model::Mode;
use qadoc_core::oracle::EndpointConfig;
use qadoc_core::pipeline::PipelineConfig;

use crate::CliError;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub mode: Option<String>,
    pub seed: Option<u64>,
    pub fanout_limit: Option<usize>,
    pub max_rounds: Option<usize>,
    pub lattice_limit: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub cache_path: Option<PathBuf>,
    pub offline: Option<bool>,
    pub endpoint: Option<EndpointConfig>,
}

/// The fully resolved configuration every run embeds (as a digest) in its
/// reports.
#[derive(Debug, Clone, Serialize)]
pub struct EffectiveConfig {
    pub mode: Mode,
    pub seed: u64,
    pub fanout_limit: usize,
    pub max_rounds: usize,
    pub lattice_limit: usize,
    pub out_dir: PathBuf,
    pub cache_path: Option<PathBuf>,
    pub offline: bool,
    pub endpoint: Option<EndpointConfig>,
}

pub struct Overrides {
    pub mode: Option<String>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub cache: Option<PathBuf>,
    pub offline: bool,
}

impl EffectiveConfig {
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self, CliError> {
        let file: FileConfig = match path {
            Some(p) => {
                let raw = std::fs::read_to_string(p).map_err(|e| {
                    CliError::Config(format!("cannot read config {}: {e}", p.display()))
                })?;
                toml::from_str(&raw)
                    .map_err(|e| CliError::Config(format!("invalid config: {e}")))?
            }
            None => FileConfig::default(),
        };
        let mode_str = overrides
            .mode
            .clone()
            .or(file.mode)
            .unwrap_or_else(|| "factset".to_string());
        let mode: Mode = mode_str
            .parse()
            .map_err(|_| CliError::Config(format!("unknown mode: {mode_str}")))?;
        let config = EffectiveConfig {
            mode,
            seed: overrides.seed.or(file.seed).unwrap_or(0),
            fanout_limit: file.fanout_limit.unwrap_or(5),
            max_rounds: file.max_rounds.unwrap_or(3),
            lattice_limit: file.lattice_limit.unwrap_or(4096),
            out_dir: overrides.out.clone().or(file.out_dir).unwrap_or_else(|| PathBuf::from("out")),
            cache_path: overrides.cache.clone().or(file.cache_path),
            offline: overrides.offline || file.offline.unwrap_or(false),
            endpoint: file.endpoint,
        };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.fanout_limit < 2 {
            return Err(CliError::Config("fanout_limit must be at least 2".into()));
        }
        if self.max_rounds == 0 {
            return Err(CliError::Config("max_rounds must be positive".into()));
        }
        if self.mode == Mode::Llm && self.endpoint.is_none() && !self.offline {
            return Err(CliError::Config(
                "llm mode requires an [endpoint] section (or --offline with a cache)".into(),
            ));
        }
        Ok(())
    }

    pub fn pipeline_config(&self) -> PipelineConfig {
        PipelineConfig {
            mode: self.mode,
            fanout_limit: self.fanout_limit,
            max_rounds: self.max_rounds,
            lattice_limit: self.lattice_limit,
            seed: self.seed,
        }
    }

    /// Digest of the effective configuration, embedded in every report.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(serde_json::to_string(self).expect("config serializes").as_bytes());
        hex::encode(hasher.finalize())
    }
}
