//! Crate-wide error type. Variants map onto the CLI exit-code policy:
//! user-correctable problems (bad arguments, degenerate or malformed inputs)
//! are distinguished from runtime failures (I/O, internal numerical faults).

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or input violates a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Input is structurally fine but numerically unusable (e.g. all-zero).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// The requested quantity is undefined for these inputs.
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed file contents (WAV headers, manifests, config documents).
    #[error("format error: {0}")]
    Format(String),

    /// A computation produced something it never should (non-finite values,
    /// solver breakdown despite loading). Always a bug or numerical fault,
    /// never silently ignored.
    #[error("internal error: {0}")]
    Internal(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        match err.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => Error::Format(format!("csv error: {other:?}")),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True when the cause is something the caller can fix in their inputs
    /// (exit code 2 territory) rather than a runtime failure (exit code 1).
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidArgument(_)
                | Error::DegenerateInput(_)
                | Error::Domain(_)
                | Error::Format(_)
                | Error::Json(_)
        )
    }
}
