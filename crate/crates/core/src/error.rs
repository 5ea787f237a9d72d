use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("quadrature exact to degree {available}, but degree {required} is needed")]
    InsufficientQuadrature { required: usize, available: usize },

    #[error("grid fields belong to different quadrature rules")]
    RuleMismatch,

    #[error("dyadic band N = {0} contains no degree")]
    EmptyBand(f64),

    #[error("spectrum of degree {degree} exceeds tensor max degree {max}")]
    BandExceedsTensor { degree: usize, max: usize },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("enumeration of {size} candidates exceeds budget {budget}")]
    BudgetExceeded { size: u128, budget: u128 },

    #[error("condition ā²/a = b is undefined for a = 0")]
    ConditionUndefined,

    #[error("condition ā²/a = b fails; no gauge decomposition exists")]
    NoGauge,

    #[error("nonlinearity is identically zero (a = b = 0)")]
    DegenerateNonlinearity,

    #[error("closed-form solution evaluated at its pole")]
    AtBlowup,

    #[error("composite rule under-resolved: panel refinement changed value by {0:e}")]
    UnderResolved(f64),

    #[error("exponent fit needs at least 3 distinct m values, got {0}")]
    DegenerateDesign(usize),

    #[error("tensor cache: {0}")]
    Cache(String),
}

pub type Result<T> = std::result::Result<T, Error>;
