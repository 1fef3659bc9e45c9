//! Crate-wide error type.

/// Errors produced by any operation in this crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Dimension or shape mismatch between operands.
    #[error("shape error: {0}")]
    Shape(String),
    /// An argument is outside its valid range.
    #[error("domain error: {0}")]
    Domain(String),
    /// The input data cannot support the requested operation.
    #[error("data error: {0}")]
    Data(String),
    /// A computation produced or encountered a non-finite value.
    #[error("numeric error: {0}")]
    Numeric(String),
    /// An evaluation protocol has no valid instances to score.
    #[error("evaluation error: {0}")]
    Evaluation(String),
    /// A serialized file is malformed; `offset` points at the offending byte.
    #[error("format error at byte {offset}: {reason}")]
    Format { offset: u64, reason: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    pub fn format(offset: u64, reason: impl Into<String>) -> Self {
        Error::Format {
            offset,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
