use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("shape mismatch: expected length {expected}, found {found}")]
    Shape { expected: usize, found: usize },

    #[error("numerical failure{}: {reason}", index.map(|i| format!(" at index {i}")).unwrap_or_default())]
    Numerical { index: Option<usize>, reason: String },

    #[error("blow-up suspected at step {step}: {reason}")]
    BlowUp { step: usize, reason: String },

    #[error("reference solution unreliable: self-check difference {difference:e} exceeds {tolerance:e}")]
    ReferenceUnreliable { difference: f64, tolerance: f64 },

    #[error("insufficient data: {usable} usable points, at least {required} required")]
    InsufficientData { usable: usize, required: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn numerical(index: impl Into<Option<usize>>, reason: impl Into<String>) -> Self {
        Error::Numerical { index: index.into(), reason: reason.into() }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidInput(_) | Error::Precondition(_) => 2,
            Error::BlowUp { .. } => 4,
            Error::Io { .. } => 1,
            _ => 3,
        }
    }
}
