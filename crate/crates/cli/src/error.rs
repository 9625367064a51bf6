use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{location}: field `{field}`: {reason}")]
    Config {
        location: String,
        field: String,
        reason: String,
    },

    #[error("{0}")]
    Invalid(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("experiment rejected: {0}")]
    Core(#[from] valagg_core::Error),

    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Invalid(_) | CliError::Core(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Verification(_) => 4,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
