use thiserror::Error;

/// Errors raised by the branch, oracle and ring computations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// No flat-voltage solution exists for the requested flow.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// An internal consistency check failed (e.g. |mu| well above 1).
    #[error("inconsistent state: {0}")]
    Inconsistent(String),
}

pub type Result<T> = std::result::Result<T, FlowError>;

pub(crate) fn domain(msg: impl Into<String>) -> FlowError {
    FlowError::Domain(msg.into())
}

pub(crate) fn infeasible(msg: impl Into<String>) -> FlowError {
    FlowError::Infeasible(msg.into())
}
