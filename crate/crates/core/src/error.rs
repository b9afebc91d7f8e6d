use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("weights do not form a probability vector: {0}")]
    BadWeights(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("operation requires a finite action set")]
    RequiresFiniteActions,
    #[error("gradient undefined at boundary state: {0}")]
    BoundaryState(String),
    #[error("state has {0} optimal actions; a unique optimum is required")]
    NonUniqueOptimum(usize),
    #[error("argument outside domain: {0}")]
    DomainError(String),
    #[error("recovery map does not restore the states (error {0:e})")]
    NotARecoveryPair(f64),
    #[error("states are not orthogonal: {0}")]
    NotOrthogonal(String),
    #[error("dimension {0} is too small; at least 3 orthogonal states are needed")]
    DimensionTooSmall(usize),
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),
    #[error("problem too large for exhaustive enumeration: {0}")]
    TooLarge(String),
    #[error("forecast assigns zero probability to observed outcome {0}")]
    SupportError(usize),
    #[error("divergence from vertex {0} is infinite")]
    InfiniteAtVertex(usize),
    #[error("no portfolio has finite doubling rate")]
    Infeasible,
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
