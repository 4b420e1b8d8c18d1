use thiserror::Error;

use crate::denoise::BridgeError;
use crate::solvers::SolveTrace;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty matrix")]
    EmptyMatrix,

    #[error("haar dimension: {0} is not a power of two")]
    HaarDimension(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate secant: {0} consecutive draws with x1 = x2")]
    DegenerateSecant(usize),

    #[error("degenerate c: {0} (the closed-form maximizer needs c > 1)")]
    DegenerateC(f64),

    #[error("bracket exhausted: no c in [{lo}, {hi}] satisfies the condition")]
    BracketExhausted { lo: f64, hi: f64 },

    #[error("exact search unavailable: {0}")]
    ExactSearchUnavailable(String),

    /// Exhaustive enumeration would exceed its budget; sampled estimators
    /// (`ric_monte_carlo`) are the way forward at this size.
    #[error("enumeration budget exceeded: {needed} cases > {budget}; use the Monte Carlo estimator")]
    EnumerationBudget { needed: u128, budget: u128 },

    #[error("too many tied minimizers ({0} > 64)")]
    TooManyMinimizers(u128),

    #[error("all sampled pairs were degenerate (z = x)")]
    AllDegenerate,

    #[error("iteration diverged at step {iteration}")]
    Diverged { iteration: usize, trace: Box<SolveTrace> },

    #[error("trace too short: {0} recorded errors, need at least 5")]
    ShortTrace(usize),

    #[error("unsupported format tag: {0}")]
    UnsupportedFormat(String),

    #[error("malformed image file: {0}")]
    MalformedImage(String),

    #[error(transparent)]
    Bridge(#[from] BridgeError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
