use thiserror::Error;

/// Errors reported by configuration checks, rate evaluation, the solvers and the experiment driver.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("index out of range: cluster {cluster}, user {user}")]
    IndexOutOfRange { cluster: usize, user: usize },

    #[error("power matrix shape does not match the cluster layout")]
    ShapeMismatch,

    #[error("cluster {cluster} has a zero channel estimate; MRT precoder is undefined")]
    DegenerateEstimate { cluster: usize },

    #[error("artificial noise needs at least two antennas (null space of the estimate is empty)")]
    EmptyNullSpace,

    #[error("non-finite objective or gradient at {point:?}")]
    NonFinite { point: Vec<f64> },

    #[error("infeasible starting point: {0}")]
    InfeasibleStart(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("experiment spec parse error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
