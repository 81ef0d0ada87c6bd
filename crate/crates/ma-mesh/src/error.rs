use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Everything that maps to exit code 2.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}:{line}:{column}: {message}")]
    Config { path: PathBuf, line: usize, column: usize, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("mesh shape mismatch: {0}")]
    Shape(String),
    #[error("MA_MESH_LOG must be one of quiet, info, debug (got `{0}`)")]
    LogLevel(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

pub type CliResult<T> = Result<T, CliError>;
