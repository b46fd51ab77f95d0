//! Flat TOML run configuration.
//!
//! Every key sits at the top level: run keys (`scheme`, `episodes`, ...),
//! training keys (`gamma`, `batch_size`, ...) and scenario keys
//! (`field_size`, `agents`, `hover_power`, ...). Missing keys take their
//! defaults; unknown keys are rejected.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use acr_core::policy::EpsilonSchedule;
use acr_core::{ScenarioConfig, Scheme, TrainerConfig};
use serde::{Deserialize, Serialize};

use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingKeys {
    pub gamma: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub update_period: usize,
    pub target_sync: u64,
    pub learning_rate: f64,
    pub grad_clip: f64,
    pub epsilon_initial: f64,
    pub epsilon_anneal: f64,
    pub epsilon_floor: f64,
}

impl Default for TrainingKeys {
    fn default() -> Self {
        Self::from(TrainerConfig::default())
    }
}

impl From<TrainerConfig> for TrainingKeys {
    fn from(c: TrainerConfig) -> Self {
        Self {
            gamma: c.gamma,
            batch_size: c.batch_size,
            buffer_capacity: c.buffer_capacity,
            update_period: c.update_period,
            target_sync: c.target_sync,
            learning_rate: c.learning_rate,
            grad_clip: c.grad_clip,
            epsilon_initial: c.epsilon.initial,
            epsilon_anneal: c.epsilon.anneal_per_update,
            epsilon_floor: c.epsilon.floor,
        }
    }
}

impl From<TrainingKeys> for TrainerConfig {
    fn from(k: TrainingKeys) -> Self {
        Self {
            gamma: k.gamma,
            batch_size: k.batch_size,
            buffer_capacity: k.buffer_capacity,
            update_period: k.update_period,
            target_sync: k.target_sync,
            learning_rate: k.learning_rate,
            grad_clip: k.grad_clip,
            epsilon: EpsilonSchedule {
                initial: k.epsilon_initial,
                anneal_per_update: k.epsilon_anneal,
                floor: k.epsilon_floor,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub scheme: Scheme,
    pub episodes: usize,
    pub seed: u64,
    pub eval_iterations: usize,
    /// Dynamics seed step between evaluation iterations.
    pub eval_seed_stride: u64,
    #[serde(flatten)]
    pub training: TrainingKeys,
    #[serde(flatten)]
    pub scenario: ScenarioConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::Proposed,
            episodes: 2000,
            seed: 0,
            eval_iterations: 25,
            eval_seed_stride: 1,
            training: TrainingKeys::default(),
            scenario: ScenarioConfig::default(),
        }
    }
}

fn known_keys() -> BTreeSet<String> {
    match serde_json::to_value(RunConfig::default()) {
        Ok(serde_json::Value::Object(map)) => map.keys().cloned().collect(),
        _ => unreachable!("RunConfig serializes to an object"),
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| HarnessError::Config(e.to_string()))?;
        let known = known_keys();
        if let Some(key) = table.keys().find(|k| !known.contains(k.as_str())) {
            return Err(HarnessError::Config(format!("unknown key `{key}`")));
        }
        let config = Self::deserialize(table).map_err(|e| HarnessError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            HarnessError::Config(msg) => HarnessError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Load `path` if given, defaults otherwise.
    pub fn load_or_default(path: Option<&Path>) -> Result<Self, HarnessError> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.scenario.validate()?;
        self.trainer().validate()?;
        if self.episodes == 0 {
            return Err(HarnessError::Config("episodes must be at least 1".into()));
        }
        if self.eval_iterations == 0 {
            return Err(HarnessError::Config("eval_iterations must be at least 1".into()));
        }
        Ok(())
    }

    pub fn trainer(&self) -> TrainerConfig {
        self.training.into()
    }

    /// Canonical JSON of the resolved configuration.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(&serde_json::to_value(self).expect("config serializes")).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(RunConfig::parse("").unwrap(), RunConfig::default());
    }

    #[test]
    fn flat_keys_reach_every_section() {
        let c = RunConfig::parse(
            "scheme = \"comp1\"\nepisodes = 10\nseed = 4\nbatch_size = 16\nepsilon_floor = 0.05\n\
             agents = 3\nfield_size = 1200\nhover_power = 100.0\nfly_power = 150.0\ndelta = 1.5\n",
        )
        .unwrap();
        assert_eq!(c.scheme, Scheme::Comp1);
        assert_eq!(c.episodes, 10);
        assert_eq!(c.trainer().batch_size, 16);
        assert_eq!(c.trainer().epsilon.floor, 0.05);
        assert_eq!(c.scenario.agents, 3);
        assert_eq!(c.scenario.field_size, 1200.0);
        assert_eq!(c.scenario.energy.hover_power, 100.0);
        assert_eq!(c.scenario.energy.delta, Some(1.5));
        assert_eq!(c.scenario.users, 25);
    }

    #[test]
    fn rejects_unknown_and_invalid() {
        let err = RunConfig::parse("agnets = 3").unwrap_err();
        assert!(err.to_string().contains("agnets"), "{err}");
        assert!(RunConfig::parse("scheme = \"comp9\"").is_err());
        assert!(RunConfig::parse("agents = 0").is_err());
        assert!(RunConfig::parse("gamma = 1.5").is_err());
        assert!(RunConfig::parse("episodes = 0").is_err());
        assert!(RunConfig::parse("agents = \"four\"").is_err());
        assert!(RunConfig::parse("[section]\nagents = 2").is_err());
    }

    #[test]
    fn canonical_json_is_stable() {
        let a = RunConfig::parse("seed = 3\nagents = 2").unwrap();
        let b = RunConfig::parse("agents = 2\nseed = 3").unwrap();
        assert_eq!(a.canonical_json(), b.canonical_json());
        assert_ne!(a.canonical_json(), RunConfig::default().canonical_json());
    }
}
