use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("operands live on different grids")]
    GridMismatch,
    #[error("operands have different time nodes")]
    NodeMismatch,
    #[error("trajectory has no time nodes")]
    EmptyTrajectory,
    #[error("negative time {0}")]
    NegativeTime(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid fixed-point constants: {0}")]
    InvalidConstants(String),
    #[error("contraction condition (1-c2)^2 > 4 c1 |R| fails: c1={c1}, c2={c2}, r_norm={r_norm}")]
    ConditionViolated { c1: f64, c2: f64, r_norm: f64 },
    #[error("declared bound constants do not dominate the maps: {0}")]
    ConstantsViolated(String),
    #[error("Picard iteration did not reach tol {tol} in {iterations} iterations (last step {last_step})")]
    NoConvergence { iterations: usize, tol: f64, last_step: f64 },
    #[error("no window of at least two steps satisfies the contraction condition (last tried {tried} steps)")]
    WindowCollapse { tried: usize },
    #[error("test function unsupported: {0}")]
    UnsupportedTestFunction(String),
    #[error("exponent pair (l={l}, s={s}) violates 3/s + 2/l = 4")]
    ScalingViolation { l: f64, s: f64 },
    #[error("negative weight {value} at sample {index}")]
    NegativeWeight { index: usize, value: f64 },
    #[error("config error: {0}")]
    Config(String),
    #[error("malformed file {path}: {reason}")]
    Format { path: String, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
