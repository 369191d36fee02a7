use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid config: `{field}` {reason}")]
    InvalidConfig { field: &'static str, reason: String },

    /// SIR is undefined (conceptually +inf) for a realization with no interferer.
    #[error("realization has no interferer (k = 1)")]
    NoInterferer,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("integral diverges: {0}")]
    DivergentIntegral(String),

    #[error("numeric overflow: {0}")]
    Overflow(String),

    #[error("infinite age: success and arrival probabilities must be positive (mu = {mu}, p_a = {p_a})")]
    InfiniteAge { mu: f64, p_a: f64 },

    #[error("degenerate objective: {0}")]
    DegenerateObjective(String),
}

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidConfig {
        field,
        reason: reason.into(),
    }
}
