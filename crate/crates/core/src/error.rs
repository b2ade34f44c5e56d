use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid search bracket: lo = {lo}, hi = {hi}")]
    InvalidBracket { lo: f64, hi: f64 },

    /// The scenario admits no operating point satisfying the reliability targets.
    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("not enough Monte Carlo trials: need at least {needed}, got {got}")]
    InsufficientTrials { needed: u64, got: u64 },

    /// Unit average power cannot be met by truncated power inversion with a zero threshold.
    #[error("degenerate eMBB policy: {0}")]
    DegeneratePolicy(String),

    #[error("invalid Monte Carlo plan: {0}")]
    InvalidPlan(String),

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
