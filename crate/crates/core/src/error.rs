use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid distribution parameter: {0}")]
    InvalidDistribution(String),

    #[error("cannot parse distribution spec `{0}`")]
    ParseSpec(String),

    #[error("invalid decay parameters: {0}")]
    InvalidDecayParams(String),

    #[error("non-finite tail evaluation at t = {t}, s = {s}")]
    NonFiniteTail { t: f64, s: f64 },

    #[error("decay assumption not certified: {0}")]
    NotCertified(String),

    #[error("path must have at least {min} finite increments (got {got})")]
    InvalidPath { min: usize, got: usize },

    #[error("path increment {index} is not finite")]
    NonFiniteIncrement { index: usize },

    #[error("index {index} out of range {lo}..={hi}")]
    IndexOutOfRange { index: usize, lo: usize, hi: usize },

    #[error("iterated sum formulas disagree at index {index}: {cumulative} vs {weighted}")]
    IteratedSumMismatch {
        index: usize,
        cumulative: f64,
        weighted: f64,
    },

    #[error("n = {n} outside supported range {lo}..={hi}")]
    SizeOutOfRange { n: usize, lo: usize, hi: usize },

    #[error("operation requires an order-{expected} table")]
    WrongOrder { expected: u8 },

    #[error("requested {requested} path-steps exceeds budget of {budget}")]
    BudgetExceeded { requested: u128, budget: u128 },

    #[error("invalid run configuration: {0}")]
    InvalidConfig(String),

    #[error("law {0} is not symmetric")]
    NotSymmetric(String),

    #[error("need at least {needed} usable points for a fit, got {got}")]
    InsufficientPoints { needed: usize, got: usize },

    #[error("covariance pair requires m >= k >= 1 (got k = {k}, m = {m})")]
    CovOrdering { k: u64, m: u64 },

    #[error("{0}")]
    Serialization(String),
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Serialization(err.to_string())
    }
}
