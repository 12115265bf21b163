use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point {point:?} lies outside the domain of `{objective}`")]
    DomainViolation { objective: String, point: Vec<f64> },

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("gaussian process fit failed: {0}")]
    FitFailure(String),

    #[error("posterior sampling failed: {0}")]
    Sampling(String),

    #[error("acquisition surface is flat: {accepted} of {requested} samples after {proposals} proposals")]
    FlatSurface {
        requested: usize,
        accepted: usize,
        proposals: usize,
    },

    #[error("candidate pool exhausted: {needed} points needed, {available} unevaluated rows left")]
    PoolExhausted { needed: usize, available: usize },

    #[error("strategy `{strategy}` failed: {reason}")]
    StrategyFailure { strategy: String, reason: String },

    #[error("metric unavailable: {0}")]
    MetricUnavailable(String),

    #[error("solver diverged: {0}")]
    Divergence(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn shape(expected: usize, got: usize) -> Self {
        Error::Shape { expected, got }
    }
}
