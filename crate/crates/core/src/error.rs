use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the augmentation toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// A value violates the invariant of its type (e.g. a non-rigid transform).
    #[error("invariant violated: {0}")]
    Invariant(String),

    /// Input outside an operation's mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Caller broke an operation's precondition (mismatched sizes, label maps).
    #[error("contract violated: {0}")]
    Contract(String),

    /// Invalid parameters or class selections.
    #[error("configuration error: {0}")]
    Config(String),

    /// Malformed binary or raster data.
    #[error("{path}: format error: {message}")]
    Format { path: PathBuf, message: String },

    /// Malformed text input (calibration files, label maps, scene files).
    #[error("{path}: parse error: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
