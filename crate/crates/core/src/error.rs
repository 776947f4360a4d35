use thiserror::Error;

/// Errors raised by the solver and its verification tools.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("sigma = 0 is a pole of the dual function")]
    DualPole,

    #[error("sigma = {sigma} lies outside the dual domain [{lower}, +inf)")]
    OutsideDualDomain { sigma: f64, lower: f64 },

    #[error("operation requires the {expected} regime, got {got}")]
    WrongRegime { expected: &'static str, got: String },

    #[error("force term is zero; use the perturbation solver")]
    ZeroForce,

    #[error("force term is nonzero; the perturbation solver only handles f = 0")]
    NonzeroForce,

    #[error("f is not in the range of B^T B (residual {residual:e})")]
    NotInRange { residual: f64 },

    #[error("point is not in the range of B (residual {residual:e})")]
    NotInRangeOfB { residual: f64 },

    #[error("zero direction")]
    ZeroDirection,

    #[error("point is not a saddle")]
    NotSaddle,

    #[error("internal solver error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
