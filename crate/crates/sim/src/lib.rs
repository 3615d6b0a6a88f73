//! Experiment harness, file formats and CLI plumbing for `otfs-core`.

pub mod cli;
pub mod config;
pub mod harness;
pub mod io;

use thiserror::Error;

/// Failures split by exit code: configuration problems exit with 1,
/// everything else with 2.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl From<otfs_core::Error> for SimError {
    fn from(e: otfs_core::Error) -> Self {
        SimError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for SimError {
    fn from(e: std::io::Error) -> Self {
        SimError::Runtime(e.to_string())
    }
}

impl From<csv::Error> for SimError {
    fn from(e: csv::Error) -> Self {
        SimError::Runtime(e.to_string())
    }
}

impl SimError {
    pub fn exit_code(&self) -> i32 {
        match self {
            SimError::Config(_) => 1,
            SimError::Runtime(_) => 2,
        }
    }
}
