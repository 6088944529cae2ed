use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("step cap of {cap} exceeded while {context}")]
    StepCap { cap: u64, context: &'static str },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("malformed input: {0}")]
    MalformedInput(String),

    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("nonpositive estimate at r = {r}")]
    NonPositive { r: f64 },

    #[error("missing radius {0}")]
    MissingRadius(f64),

    #[error("schema mismatch: {0}")]
    Schema(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
