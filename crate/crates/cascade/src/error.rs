use std::path::PathBuf;

use cascade_core::{CascadeError, EvalError, ScoreError};

/// Errors surfaced by the file formats, config loader and CLI. Each variant
/// maps to one process exit code.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Bad input data: malformed files, duplicate ids, unknown documents.
    #[error("{0}")]
    Data(String),
    /// Bad pipeline or scorer configuration.
    #[error("{0}")]
    Config(String),
    /// A scorer backend failed or violated the protocol.
    #[error("{0}")]
    Backend(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Data(_) | Error::Io { .. } => 1,
            Error::Config(_) => 2,
            Error::Backend(_) => 3,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<CascadeError> for Error {
    fn from(e: CascadeError) -> Self {
        match e {
            CascadeError::InvalidConfig(_) => Error::Config(e.to_string()),
            CascadeError::Stage { .. } => Error::Backend(e.to_string()),
            CascadeError::UnknownDocument(_) => Error::Data(e.to_string()),
        }
    }
}

impl From<EvalError> for Error {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Cascade(c) => c.into(),
            other => Error::Config(other.to_string()),
        }
    }
}

impl From<ScoreError> for Error {
    fn from(e: ScoreError) -> Self {
        Error::Backend(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
