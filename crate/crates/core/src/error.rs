use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no sign change for {what} on [{lo}, {hi}]")]
    NoSignChange { what: &'static str, lo: f64, hi: f64 },
    #[error("no simple graph after {0} attempts")]
    AttemptsExhausted(usize),
    #[error("instance too large: n = {n} exceeds {max}")]
    TooLarge { n: usize, max: usize },
    #[error("membership has length {got}, graph has {expected} vertices")]
    LengthMismatch { expected: usize, got: usize },
    #[error("input set is not independent")]
    NotIndependent,
    #[error("iteration did not converge: {0}")]
    Divergence(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("degenerate normalizer in {0}")]
    DegenerateNormalizer(&'static str),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
