//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Argument outside the mathematical domain of the operation.
    #[error("domain error in {op}: {msg}")]
    Domain { op: &'static str, msg: String },

    /// Result would exceed the double-precision range.
    #[error("overflow in {op}: {msg}")]
    Overflow { op: &'static str, msg: String },

    /// A series or iterative scheme stopped before reaching its target.
    /// `estimate` carries the best value found so far.
    #[error("{op} did not converge: {msg} (best estimate {estimate:.6e})")]
    NonConvergence {
        op: &'static str,
        msg: String,
        estimate: f64,
    },

    /// Malformed or inconsistent user input (JSON files, CLI parameters).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Operation is not defined for the given model or input kind.
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Domain { op, msg: msg.into() }
    }

    pub(crate) fn overflow(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Overflow { op, msg: msg.into() }
    }

    pub(crate) fn no_conv(op: &'static str, msg: impl Into<String>, estimate: f64) -> Self {
        Error::NonConvergence { op, msg: msg.into(), estimate }
    }
}
