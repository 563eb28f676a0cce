use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::CliError;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Provenance record written next to every output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_digest: String,
    pub tool_version: String,
    pub seed: u64,
    pub timestamp: u64,
    pub outputs: Vec<PathBuf>,
}

/// SHA-256 of the canonical JSON form of the parsed config with the
/// effective seed filled in; formatting and comments do not matter.
pub fn config_digest(config: &ExperimentConfig, seed: u64) -> String {
    let mut effective = config.clone();
    effective.seed = Some(seed);
    let canonical = serde_json::to_vec(&effective).expect("config serializes");
    hex::encode(Sha256::digest(&canonical))
}

impl RunManifest {
    pub fn new(command: &str, config: &ExperimentConfig, seed: u64, outputs: Vec<PathBuf>) -> Self {
        Self {
            command: command.to_string(),
            config_digest: config_digest(config, seed),
            tool_version: TOOL_VERSION.to_string(),
            seed,
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            outputs,
        }
    }

    /// `<primary>.manifest.json`.
    pub fn path_for(primary: &Path) -> PathBuf {
        let mut name = primary.file_name().unwrap_or_default().to_os_string();
        name.push(".manifest.json");
        primary.with_file_name(name)
    }

    pub fn write(&self, primary: &Path) -> Result<PathBuf, CliError> {
        let path = Self::path_for(primary);
        let mut text = serde_json::to_string_pretty(self).map_err(CliError::io)?;
        text.push('\n');
        std::fs::write(&path, text).map_err(CliError::io)?;
        Ok(path)
    }
}
