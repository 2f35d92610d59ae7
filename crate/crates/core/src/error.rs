use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("weights must be nonnegative and finite (index {0})")]
    NonPositiveWeights(usize),
    #[error("matrix is rank deficient (pivot {pivot} at column {column})")]
    RankDeficient { column: usize, pivot: f64 },
    #[error("matrix is not symmetric positive definite: {0}")]
    NotPositiveDefinite(String),
    #[error("accuracy must lie in (0, 1/2], got {0}")]
    InvalidAccuracy(f64),
    #[error("iteration did not reach the requested accuracy (estimated {estimate:e}, target {target:e})")]
    NonConvergence { estimate: f64, target: f64 },
    #[error("solver handle is not linear: {0}")]
    NotLinear(String),
    #[error("solver handle is not an approximate inverse: band {band:.4} exceeds {allowed:.4}")]
    SolverMismatch { band: f64, allowed: f64 },
    #[error("capacitance matrix is singular")]
    SingularCapacitance,
    #[error("change budget exceeded: {used} > {budget}")]
    BudgetExceeded { used: usize, budget: usize },
    #[error("weights left the drift band (Rayleigh quotient {quotient:.4e}, beta {beta})")]
    DriftViolation { quotient: f64, beta: f64 },
    #[error("weight change violates the stability bound ({norm} = {value:.4} > {bound})")]
    StabilityViolation { norm: &'static str, value: f64, bound: f64 },
    #[error("churn budget exceeded: {changes} > {budget}")]
    ChurnBudgetExceeded { changes: usize, budget: usize },
    #[error("solver handle refers to an earlier round ({handle} < {current})")]
    StaleHandle { handle: u64, current: u64 },
    #[error("problem is infeasible: {0}")]
    Infeasible(String),
    #[error("iteration limit {0} reached")]
    IterationLimit(usize),
    #[error("polytope has no interior point")]
    NoInterior,
    #[error("polytope is unbounded")]
    Unbounded,
    #[error("graph is disconnected: {0}")]
    Disconnected(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
