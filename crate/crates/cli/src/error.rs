use std::io;

use thiserror::Error;

pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("non-finite value in row {row}, column `{column}`")]
    NonFinite { row: usize, column: String },
    #[error("invalid input: {0}")]
    Model(#[from] loopsource_core::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError::Usage(message.into())
    }

    pub fn flag(flag: &str, reason: impl std::fmt::Display) -> Self {
        CliError::Usage(format!("{flag}: {reason}"))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            // a rejected model parameter came from a flag value
            CliError::Usage(_) | CliError::Model(_) => EXIT_USAGE,
            CliError::NonFinite { .. } => EXIT_NUMERICAL,
            CliError::Io(_) | CliError::Csv(_) | CliError::Json(_) => EXIT_FAILURE,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
