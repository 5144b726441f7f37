use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Custom structure constants failed an algebra axiom.
    #[error("invalid algebra: {axiom} fails at basis triple ({p}, {q}, {s}), residual {residual:e}")]
    InvalidAlgebra {
        axiom: &'static str,
        p: usize,
        q: usize,
        s: usize,
        residual: f64,
    },

    #[error("element is not invertible (singular value ratio {condition:e})")]
    NotInvertible { condition: f64 },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("resource limit: {0}")]
    ResourceLimit(String),

    /// The input jet is not of the form b·H(b) (or H(b)·b).
    #[error("factorization failed: max residual {residual:e}")]
    FactorizationFailed { residual: f64 },

    /// A creation operator would leave the truncated Fock space.
    #[error("Fock depth {depth} exceeded by a creation at level {level}")]
    DepthExceeded { level: usize, depth: usize },

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}
