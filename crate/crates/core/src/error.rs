use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point {point:?} (with stencil margin {margin}) leaves the chart domain")]
    ChartBounds { point: Vec<f64>, margin: f64 },

    #[error("metric is not positive definite at {point:?}")]
    DegenerateMetric { point: Vec<f64> },

    #[error("invalid soliton spec: {0}")]
    InvalidSpec(String),

    #[error("unsupported fiber: {0}")]
    UnsupportedFiber(String),

    #[error("model has constant potential (k = n); {0} requires a nonconstant potential")]
    ConstantPotential(&'static str),

    #[error("stencil at s = {s} does not fit inside the sampled grid [{lo}, {hi}]")]
    StencilOutOfRange { s: f64, lo: f64, hi: f64 },

    #[error("b({s}) = {value} is not positive")]
    NonPositive { s: f64, value: f64 },

    #[error("s = {s} is not a node of the sampled grid")]
    NotOnGrid { s: f64 },

    #[error("invalid sampled function: {0}")]
    InvalidGrid(String),

    #[error("degenerate sigma denominator |b (b' - 2 lambda)| = {value:e} at s = {s}")]
    DegenerateDenominator { s: f64, value: f64 },

    #[error("start point is critical: |grad f|^2 = {gradnorm_sq:e}")]
    CriticalStart { gradnorm_sq: f64 },

    #[error("flow left the chart at s = {s}; restart the integration in a rotated chart")]
    ChartExit { s: f64, point: Vec<f64> },

    #[error("need at least {needed} nodes, got {got}")]
    InsufficientNodes { needed: usize, got: usize },

    #[error("radius profile spans a factor {span:.3}; at least one decade is required")]
    InsufficientSpan { span: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
