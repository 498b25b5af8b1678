use thiserror::Error;

/// Errors produced by validation, parsing, and the numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on input data was violated.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// A file could not be parsed; `line` is 1-based.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A metric or transform is undefined for the given input
    /// (e.g. correlation of a constant matrix).
    #[error("undefined result: {0}")]
    Undefined(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
