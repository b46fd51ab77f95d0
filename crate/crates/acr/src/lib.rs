//! Harness around `acr-core`: configuration files, checkpoints, metrics and
//! trace formats, evaluation and the FLOPS report.

pub mod checkpoint;
pub mod config;
pub mod error;
pub mod evaluate;
pub mod flops;
pub mod manifest;
pub mod metrics;
pub mod trace;

pub use error::HarnessError;
