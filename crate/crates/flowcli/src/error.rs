use flatflow::FlowError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("{0}")]
    Infeasible(String),

    #[error("internal: {0}")]
    Internal(String),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Io(_) => 4,
            CliError::Internal(_) => 1,
        }
    }

    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }
}

impl From<FlowError> for CliError {
    fn from(e: FlowError) -> Self {
        match e {
            FlowError::Domain(msg) => CliError::Usage(msg),
            FlowError::Infeasible(msg) => CliError::Infeasible(format!("infeasible: {msg}")),
            FlowError::Inconsistent(msg) => CliError::Internal(msg),
        }
    }
}
