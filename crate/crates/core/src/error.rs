use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Caller supplied arguments outside an operation's domain.
    #[error("invalid input: {0}")]
    Input(String),

    /// A probability table or state violates its invariants.
    #[error("validation failed at {field}: {reason}")]
    Validation { field: String, reason: String },

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("unsupported functional form: {0}")]
    UnsupportedForm(String),

    #[error("LP solver failure: {0}")]
    Solver(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
