use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("coefficient evaluation produced a non-finite value at t={t}, x={x:?}")]
    Coefficient { t: f64, x: Vec<f64> },

    #[error("model validation failed: {0}")]
    Model(String),

    #[error("payoff specification: {0}")]
    Payoff(String),

    #[error("simulation produced a non-finite state on path {path} at step {step}")]
    Simulation { path: usize, step: usize },

    #[error("index {index} out of range (max {max})")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("grid: {0}")]
    Grid(String),

    #[error("PSOR did not converge on layer {layer}: residual {residual:e} after {iterations} iterations")]
    SolverDivergence { layer: usize, residual: f64, iterations: usize },

    #[error("query (t={t}, S={s:?}) lies outside the surface box")]
    Extrapolation { t: f64, s: Vec<f64> },

    #[error("layer size mismatch: expected {expected}, got {got}")]
    LayerSize { expected: usize, got: usize },

    #[error("tree: {0}")]
    Tree(String),

    #[error("process is not a supermartingale at node {node}")]
    NotSupermartingale { node: usize },

    #[error("processes live on different trees")]
    TreeMismatch,

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("stopping-time enumeration too large at node {node}: {count} stopping times (limit {limit})")]
    OracleSize { node: usize, count: u128, limit: u128 },

    #[error("unsupported model: {0}")]
    UnsupportedModel(String),

    #[error("checkpoint {index} out of range (steps {steps})")]
    Checkpoint { index: usize, steps: usize },

    #[error("probe specification: {0}")]
    ProbeSpec(String),

    #[error("hedge field: {0}")]
    Field(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
