use thiserror::Error;

/// Errors produced anywhere in the counting and spin-simulation stack.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dimension {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("observable is not Hermitian (deviation {0:e})")]
    NonHermitianObservable(f64),

    #[error("generator is not Hermitian (deviation {0:e})")]
    NonHermitianInput(f64),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("invalid oracle: {0}")]
    InvalidOracle(String),

    #[error("{what} out of range: {detail}")]
    OutOfRange { what: &'static str, detail: String },

    #[error("reference signal at r=0 is {0:e}; cannot normalize")]
    ZeroReference(f64),

    #[error("need at least {needed} points to fit, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("series is constant at {0} and cannot be fitted")]
    DegenerateSeries(f64),

    #[error("phase {0} outside [0, pi]")]
    PhaseOutOfRange(f64),

    #[error("oracle has no matching item")]
    NoMatch,

    #[error("infeasible timing: 1/(2J) = {half_period:e} s must exceed 3*pi/omega = {eps270:e} s")]
    InfeasibleTiming { half_period: f64, eps270: f64 },

    #[error("invalid spin system: {0}")]
    InvalidSystem(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
