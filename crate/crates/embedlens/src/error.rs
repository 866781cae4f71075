//! Error type shared across the crate.
//!
//! Everything fallible returns [`Result`]. Variants map to the failure
//! classes callers actually branch on: contract violations (bad arguments),
//! degenerate inputs (empty or non-finite data), singular matrices where an
//! exact inverse was demanded, iterative solvers that did not converge,
//! parse failures with file/line positions, and plain I/O.

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument violated a documented precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    /// Input data is empty, non-finite, or otherwise unusable.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A matrix inversion was requested under a policy that forbids fallback.
    #[error("singular matrix: {0}")]
    Singular(String),

    /// An iterative procedure failed to converge within its budget.
    #[error("convergence failure: {0}")]
    Convergence(String),

    /// A file could not be parsed; `line` is 1-based.
    #[error("parse error at {path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    /// Configuration file is structurally or semantically invalid.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        Error::Degenerate(msg.into())
    }
}
