use thiserror::Error;

/// Errors raised by the spectral kernel, the stochastic drivers and the
/// diagnostics.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: expected n = {expected}, found n = {found}")]
    GridMismatch { expected: usize, found: usize },

    #[error("component mismatch: expected {expected}, found {found}")]
    ComponentMismatch { expected: usize, found: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("instability at t = {time}: {field} norm grew from {before:e} to {after:e}")]
    Instability {
        time: f64,
        field: &'static str,
        before: f64,
        after: f64,
    },

    #[error("insufficient history: need at least {needed} snapshots, found {found}")]
    InsufficientHistory { needed: usize, found: usize },

    #[error("window violation: {0}")]
    WindowViolation(String),

    #[error("degenerate estimate: {0}")]
    Degenerate(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
