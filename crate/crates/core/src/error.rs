use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension {0} not supported (need n >= 3)")]
    Dimension(usize),

    #[error("invalid chart: {0}")]
    InvalidChart(String),

    #[error("degenerate metric at {point:?}: {reason}")]
    DegenerateMetric { point: Vec<f64>, reason: String },

    #[error("warping function must stay positive, got r({s}) = {value}")]
    InvalidWarp { s: f64, value: f64 },

    #[error("point {point:?} lies outside the chart domain (coordinate {coord})")]
    OutOfDomain { point: Vec<f64>, coord: usize },

    #[error("invalid fiber: {0}")]
    InvalidFiber(String),

    #[error("jet order {have} too low, {need} required for {what}")]
    InsufficientOrder { have: usize, need: usize, what: &'static str },

    #[error("{0} is not a regular value: min |grad f| = {1:e}")]
    NotRegular(f64, f64),

    #[error("|f| = {0:e} is below the guard {1:e}")]
    PotentialTooSmall(f64, f64),

    #[error("model error: {0}")]
    Model(String),

    #[error("invalid region: {0}")]
    Region(String),

    #[error("integration failed: {0}")]
    Integration(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
