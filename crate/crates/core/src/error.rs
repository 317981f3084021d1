use thiserror::Error;

/// Errors raised by optimizers, checkpoints and problems.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimError {
    #[error("invalid configuration: {field}: {reason}")]
    Config { field: &'static str, reason: String },

    #[error("shape mismatch in group {group}: expected {expected}, got {actual}")]
    Shape {
        group: usize,
        expected: usize,
        actual: usize,
    },

    #[error("non-finite value in {what} (group {group}, index {index})")]
    Numerics {
        what: &'static str,
        group: usize,
        index: usize,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("malformed checkpoint at byte {offset}: {reason}")]
    Format { offset: usize, reason: String },
}

impl OptimError {
    pub(crate) fn config(field: &'static str, reason: impl Into<String>) -> Self {
        OptimError::Config {
            field,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, OptimError>;
