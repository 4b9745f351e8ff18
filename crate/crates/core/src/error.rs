use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = SimError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum SimError {
    /// A configuration value is out of range or malformed. `path` is the
    /// dotted field path inside the config document (e.g. `econ.mc.H`).
    #[error("invalid configuration at `{path}`: {message}")]
    Config { path: String, message: String },

    /// An operation was called outside its contract.
    #[error("usage error: {0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl SimError {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        SimError::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        SimError::Usage(message.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SimError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        SimError::Parse {
            path: path.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by bad input (as opposed to runtime / I/O).
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            SimError::Config { .. } | SimError::Usage(_) | SimError::Parse { .. }
        )
    }
}
