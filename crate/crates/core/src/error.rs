use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("matrix is singular to working precision")]
    Singular,
    #[error("matrix has non-finite entries")]
    NonFinite,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SdeError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("blow-up at t = {time}: non-finite or singular state")]
    BlowUp { time: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("overflow evaluating nu_{n} at t = {t}")]
    Overflow { n: i64, t: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TracePolyError {
    #[error("invalid word: {0}")]
    InvalidWord(String),
    #[error("trace degree {degree} exceeds the cap {cap}")]
    DegreeCap { degree: usize, cap: usize },
    #[error("closed subspace at degree {degree} exceeds {cap} monomials")]
    SubspaceCap { degree: usize, cap: usize },
    #[error("index {0} has no matrix or time attached")]
    MissingIndex(u32),
    #[error("weights must be nonnegative, got r = {r}, s = {s}")]
    NegativeWeights { r: f64, s: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FreeProcessError {
    #[error("invalid timed word: {0}")]
    InvalidWord(String),
    #[error("routes disagree: semigroup {route_a}, free factorization {route_b}")]
    Inconsistent { route_a: String, route_b: String },
    #[error(transparent)]
    TracePoly(#[from] TracePolyError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid experiment: {0}")]
    InvalidExperiment(String),
    #[error("{failed} of {paths} paths blew up (limit 0.1%)")]
    TooManyBlowUps { failed: usize, paths: usize },
    #[error("sweep needs at least 3 dimensions, got {0}")]
    TooFewDimensions(usize),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Sde(#[from] SdeError),
    #[error(transparent)]
    TracePoly(#[from] TracePolyError),
    #[error(transparent)]
    FreeProcess(#[from] FreeProcessError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("thread pool: {0}")]
    ThreadPool(String),
}
