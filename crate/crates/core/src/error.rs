use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("index {index} has zero marginal inclusion probability")]
    ZeroMarginal { index: usize },
    #[error("probabilities sum to {sum}, expected 1")]
    ProbabilityMass { sum: f64 },
    #[error("invalid probability {value} at position {position}")]
    BadProbability { position: usize, value: f64 },
    #[error("partition groups are not a disjoint cover of the index set: {reason}")]
    BadPartition { reason: &'static str },
    #[error("subset {subset} is invalid: {reason}")]
    BadSubset { subset: usize, reason: &'static str },
    #[error("support of size {size} exceeds the enumeration limit {limit}")]
    EnumerationTooLarge { size: u128, limit: usize },
    #[error("bias-correcting weights violate unbiasedness at index {index} (sum {sum})")]
    UnbiasednessViolated { index: usize, sum: f64 },
    #[error("index {index} is not in the subset")]
    IndexNotInSubset { index: usize },
    #[error("minibatch size {tau} invalid for n = {n}")]
    BadTau { tau: usize, n: usize },
    #[error("{name} must be positive (got {value})")]
    NonPositiveInput { name: &'static str, value: f64 },
    #[error("dimension mismatch: {what} has length {got}, expected {expected}")]
    DimensionMismatch { what: &'static str, expected: usize, got: usize },
    #[error("iterate diverged at iteration {iteration} (|x|_inf = {norm})")]
    NumericalDivergence { iteration: u64, norm: f64 },
    #[error("solution-set oracle unavailable: {reason}")]
    OracleUnavailable { reason: &'static str },
    #[error("unsupported configuration: {reason}")]
    Unsupported { reason: &'static str },
    #[error("invalid data: {reason}")]
    InvalidData { reason: alloc::string::String },
}
