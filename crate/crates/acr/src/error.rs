use std::path::PathBuf;

use acr_core::{EnvError, PolicyError, TrainError};
use thiserror::Error;

use crate::checkpoint::CheckpointError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("checkpoint does not match the scenario: {0}")]
    CheckpointMismatch(String),
    #[error("trace: {0}")]
    Trace(String),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl HarnessError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable identifier for machine-readable error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Io { .. } => "io",
            Self::Config(_) => "config",
            Self::Checkpoint(_) => "checkpoint",
            Self::CheckpointMismatch(_) => "checkpoint_mismatch",
            Self::Trace(_) => "trace",
            Self::Train(_) => "train",
            Self::Env(_) => "environment",
            Self::Policy(_) => "policy",
            Self::Json(_) => "json",
            Self::Csv(_) => "csv",
        }
    }
}
