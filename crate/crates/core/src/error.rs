use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid correlation {0}: must lie in [0, 1)")]
    InvalidCorrelation(f64),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("intercept search did not converge after {iterations} iterations (residual {residual:e})")]
    RootFind { iterations: usize, residual: f64 },

    #[error("cannot draw {requested} rows from a stratum of {available}")]
    Sampling { requested: usize, available: usize },

    #[error("both outcome classes are required ({events} events, {nonevents} non-events)")]
    SingleClass { events: usize, nonevents: usize },

    #[error("predictor column {0} has zero variance")]
    DegeneratePredictor(usize),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("weighted information matrix is not positive definite")]
    RankDeficient,

    #[error("{what} did not converge within {iterations} iterations")]
    NonConvergence { what: &'static str, iterations: usize },

    #[error("shrinkage factor undefined: likelihood-ratio statistic is zero")]
    UndefinedShrinkage,

    #[error("bootstrap exhausted {attempts} attempts for {requested} non-separated replicates")]
    BootstrapExhausted { attempts: usize, requested: usize },

    #[error("cross-validation infeasible: smallest class has {0} members")]
    CvInfeasible(usize),

    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("no admissible tuning value on the grid")]
    NoAdmissibleLambda,

    #[error("metric undefined: {0}")]
    UndefinedMetric(&'static str),

    #[error("configuration: {0}")]
    Config(String),

    #[error("{path}: {message}")]
    Io { path: String, message: String },
}
