//! Run manifest: everything needed to reproduce a run.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::checkpoint::sha256_hex;
use crate::config::RunConfig;
use crate::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub tool_version: String,
    pub core_version: String,
    pub command: String,
    pub seed: u64,
    /// SHA-256 of the canonical JSON of `config`.
    pub config_sha256: String,
    pub config: serde_json::Value,
    /// SHA-256 of each output file, by file name.
    pub outputs: BTreeMap<String, String>,
}

impl Manifest {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        let canonical = config.canonical_json();
        Self {
            tool: env!("CARGO_PKG_NAME").into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            core_version: acr_core::VERSION.into(),
            command: command.into(),
            seed: config.seed,
            config_sha256: sha256_hex(canonical.as_bytes()),
            config: serde_json::from_str(&canonical).expect("canonical JSON parses"),
            outputs: BTreeMap::new(),
        }
    }

    /// Record the hash of an output file.
    pub fn add_output(&mut self, dir: &Path, name: &str) -> Result<(), HarnessError> {
        let path = dir.join(name);
        let bytes = fs::read(&path).map_err(|e| HarnessError::io(&path, e))?;
        self.outputs.insert(name.into(), sha256_hex(&bytes));
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<(), HarnessError> {
        let json = serde_json::to_string_pretty(self)? + "\n";
        fs::write(path, json).map_err(|e| HarnessError::io(path, e))
    }

    /// The configuration this manifest was written for.
    pub fn run_config(&self) -> Result<RunConfig, HarnessError> {
        Ok(serde_json::from_value(self.config.clone())?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trips_through_manifest() {
        let config = RunConfig::parse("seed = 11\nagents = 3\nepisodes = 5").unwrap();
        let m = Manifest::new("train", &config);
        assert_eq!(m.run_config().unwrap(), config);
        assert_eq!(m.seed, 11);
        assert_eq!(m.config_sha256, Manifest::new("train", &config).config_sha256);
        assert_ne!(m.config_sha256, Manifest::new("train", &RunConfig::default()).config_sha256);
    }
}
