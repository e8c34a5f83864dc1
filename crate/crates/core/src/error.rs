use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Tensor or image shapes do not line up.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// Channel count incompatible with an activation split or pixel shuffle.
    #[error("arity error: {0}")]
    Arity(String),

    #[error("configuration error: {0}")]
    Config(String),

    /// An operation was called in the wrong order, e.g. backward without forward.
    #[error("state error: {0}")]
    State(String),

    /// An assembled architecture violates its own layer invariants.
    #[error("specification error: {0}")]
    Spec(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("training diverged at iteration {iteration}: {message}")]
    Divergence { iteration: u64, message: String },
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
}
