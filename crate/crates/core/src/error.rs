use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates its documented invariant.
    #[error("invalid configuration `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("illegal action {action}: {reason}")]
    IllegalAction { action: usize, reason: String },

    #[error("geometry error: {0}")]
    Geometry(String),

    /// The caller combined components that do not fit together.
    #[error("usage error: {0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed input: {0}")]
    Format(String),

    #[error("seed {seed} failed: {source}")]
    Seed {
        seed: u64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
