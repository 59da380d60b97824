use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),

    #[error("{0}")]
    NoSolution(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{failed} of {total} checks failed")]
    VerifyFailed { failed: usize, total: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::NoSolution(_) => 3,
            CliError::Io { .. } => 4,
            CliError::VerifyFailed { .. } => 5,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<scmn_core::Error> for CliError {
    fn from(e: scmn_core::Error) -> Self {
        match e {
            scmn_core::Error::NoSolution(_) => CliError::NoSolution(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
