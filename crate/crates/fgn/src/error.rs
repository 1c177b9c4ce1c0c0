//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by loaders, model math, and the experiment harness.
#[derive(Debug, Error)]
pub enum FgnError {
    /// Malformed input data (bad record, inconsistent columns, duplicate ids).
    #[error("format error: {0}")]
    Format(String),

    /// An input file or stream contained no usable records.
    #[error("empty input: {0}")]
    EmptyInput(String),

    /// A caller-supplied argument violated a precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Training or evaluation produced a non-finite value.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl FgnError {
    /// Process exit code for the CLI: 1 usage, 2 data format, 3 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            FgnError::InvalidArgument(_) => 1,
            FgnError::Format(_) | FgnError::EmptyInput(_) | FgnError::Io(_) | FgnError::Json(_) => {
                2
            }
            FgnError::Numerical(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, FgnError>;
