use thiserror::Error;

/// Errors raised by the analytic routines, the simulator and data ingestion.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A series or iterative solver failed to reach its tolerance.
    #[error("convergence failure: {0}")]
    Convergence(String),

    /// The optimizer could not locate a bracket for the maximum.
    #[error("bracketing failed: {0}")]
    Bracketing(String),

    /// A simulated cycle exceeded its step budget.
    #[error("step budget exhausted after {steps} steps: {context}")]
    Budget { steps: u64, context: String },

    /// The input data carries no information about the requested quantity.
    #[error("degenerate data: {0}")]
    Degenerate(String),

    /// Malformed input file.
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
