//! Crate-wide error type and exit-code mapping.

use std::path::PathBuf;

/// Errors produced by any stage of the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at {path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("training diverged at epoch {epoch}: {message}")]
    Divergence { epoch: usize, message: String },

    #[error("stale artifact: {0}")]
    Stale(String),

    #[error("missing artifact {artifact}: run `{command}` first")]
    MissingArtifact { artifact: String, command: String },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("work directory locked by {0}; remove the lock file if no other run is active")]
    Locked(PathBuf),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    /// Process exit code for the CLI. Parameter, i/o, staleness and
    /// divergence failures each get a distinct code so scripts can react.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Parameter(_) => 2,
            Error::Io { .. } | Error::Parse { .. } => 3,
            Error::Stale(_) => 4,
            Error::Divergence { .. } => 5,
            Error::MissingArtifact { .. } => 6,
            Error::Locked(_) => 7,
            Error::NotFound(_) | Error::Contract(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
