use thiserror::Error;

/// Errors shared across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("integer overflow while {0}")]
    Overflow(String),
    #[error("instance has no feasible point")]
    Infeasible,
    #[error("problem size {n} exceeds limit {limit}")]
    SizeLimit { n: usize, limit: usize },
    #[error("retry budget of {0} exhausted while generating a feasible instance")]
    RetryBudget(usize),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI: 2 usage, 3 infeasible, 4 resource limit.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Infeasible => 3,
            Error::SizeLimit { .. } | Error::RetryBudget(_) => 4,
            _ => 2,
        }
    }
}
