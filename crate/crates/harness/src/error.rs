use std::path::PathBuf;

use soaa::OptimError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid run configuration: {0}")]
    Config(String),

    #[error("unknown {kind} {name:?}; known: {known}")]
    Lookup {
        kind: &'static str,
        name: String,
        known: String,
    },

    #[error(transparent)]
    Optim(#[from] OptimError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
}

impl HarnessError {
    /// Process exit code: 2 for usage and configuration problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::Lookup { .. } | HarnessError::Json { .. } => 2,
            HarnessError::Optim(OptimError::Config { .. }) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
