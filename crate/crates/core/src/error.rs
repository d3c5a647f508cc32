use thiserror::Error;

/// Errors shared by every simulator module.
#[derive(Debug, Error)]
pub enum StpError {
    /// A register would exceed the configured qubit cap.
    #[error("capacity error: {requested} qubits requested, cap is {max}")]
    Capacity { requested: usize, max: usize },

    /// A forced outcome (or a nonunitary operator) left a branch with no weight.
    #[error("zero branch: weight {weight:e} is not above tolerance {tol:e}")]
    ZeroBranch { weight: f64, tol: f64 },

    /// The state is numerically corrupt (e.g. both measurement branches vanish).
    #[error("numerical error: {0}")]
    Numerical(String),

    /// A repeat-until-success loop ran out of its attempt budget.
    #[error("{what}: retry budget of {attempts} exhausted")]
    RetryExhausted { what: &'static str, attempts: u64 },

    /// A caller violated an operation's precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("no multiple found up to m = {m_max}")]
    NotFound { m_max: u64 },

    #[error("standards pool is empty")]
    EmptyPool,

    /// Malformed external input (files, CLI values).
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, StpError>;

pub(crate) fn precondition(msg: impl Into<String>) -> StpError {
    StpError::Precondition(msg.into())
}
