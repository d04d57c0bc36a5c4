use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument violates the operation's precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The measurement has no defined value for this input.
    #[error("undefined value: {0}")]
    Undefined(String),

    #[error("invalid similarity kernel: {0}")]
    InvalidKernel(String),

    #[error("input exceeds exact-computation limit: {0}")]
    TooLarge(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("report schema mismatch: baseline {baseline}, candidate {candidate}")]
    SchemaMismatch { baseline: String, candidate: String },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn undefined(msg: impl Into<String>) -> Self {
        Error::Undefined(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
