use thiserror::Error;

/// Errors surfaced by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid range: {0}")]
    Range(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("format error: {0}")]
    Format(String),

    #[error("non-finite values in `{layer}`{}", batch.map(|b| format!(" (batch {b})")).unwrap_or_default())]
    NonFinite { layer: String, batch: Option<usize> },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn non_finite(layer: impl Into<String>) -> Self {
        Error::NonFinite { layer: layer.into(), batch: None }
    }

    /// Attach a batch index to a numerical failure; other variants pass through.
    pub fn at_batch(self, index: usize) -> Self {
        match self {
            Error::NonFinite { layer, .. } => Error::NonFinite { layer, batch: Some(index) },
            other => other,
        }
    }

    /// Process exit code used by the command-line front end.
    ///
    /// 1 usage, 2 data, 3 numerical failure, 4 checkpoint.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::Config(_) | Error::Range(_) | Error::Dimension(_) => 1,
            Error::Data(_) | Error::Parse { .. } | Error::Format(_) | Error::Io(_) => 2,
            Error::NonFinite { .. } => 3,
            Error::Checkpoint(_) => 4,
        }
    }
}
