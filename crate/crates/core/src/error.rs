//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A raw input record could not be parsed. Carries the 1-based line
    /// number of the offending record.
    #[error("line {line}: {reason}")]
    Record { line: usize, reason: String },

    /// A trajectory is too short for the requested sequence order.
    #[error("trajectory of length {len} is shorter than order + 1 = {required}")]
    TrajectoryTooShort { len: usize, required: usize },

    /// Invalid configuration value.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Invalid argument to an operation.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// An operation that needs data received none.
    #[error("empty corpus")]
    EmptyCorpus,

    /// A corpus, model, or report file is malformed.
    #[error("format error in {path}: {reason}")]
    Format { path: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn format(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }
}
