use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("value is not divisible by p")]
    NotDivisible,
    #[error("insufficient p-adic precision: {0}")]
    InsufficientPrecision(String),
    #[error("no Hensel lift: {0}")]
    NoHenselLift(String),
    #[error("ghost vector is not in the image of the ghost map (component {index})")]
    NotInGhostImage { index: usize },
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error("prime p = {0} is not supported here (requires p >= 3)")]
    UnsupportedPrime(u64),
    #[error("symbolic term budget of {limit} terms exceeded")]
    TermBudget { limit: usize },
    #[error("marked point does not satisfy the presentation: {0}")]
    InvalidPoint(String),
    #[error("invalid curve: {0}")]
    InvalidCurve(String),
    #[error("anomalous reduction: only points in the formal group are supported")]
    UnsupportedAnomalous,
    #[error("argument outside the convergence domain: {0}")]
    ConvergenceDomain(String),
    #[error("contradictory input: {0}")]
    Contradiction(String),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
