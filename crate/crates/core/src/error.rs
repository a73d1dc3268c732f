use thiserror::Error;

/// Errors raised by model construction, simulation, and estimation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("additive functional is not finite: requires gamma > -delta (got gamma = {gamma}, delta = {delta})")]
    InfiniteFunctional { gamma: f64, delta: f64 },

    #[error("string is not integrable near 0: quadrature refinement diverges")]
    NonIntegrable,

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("site {index} (x = {x}) is not in the support of the speed measure")]
    NotInSupport { index: usize, x: f64 },

    #[error("input is not monotone on the claimed side: {0}")]
    NonMonotone(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("g_t is undefined: time {t} precedes the first visit to 0")]
    BeforeFirstZero { t: f64 },

    #[error("time {t} is outside the simulated horizon {horizon}")]
    OutsideHorizon { t: f64, horizon: f64 },

    #[error("tail-noise guard violated at t = {t}; largest usable upper window edge is {suggested_t_hi:?}")]
    TailNoise { t: f64, suggested_t_hi: Option<f64> },

    #[error("starting pair (z = {z}, x = {x}) is not admissible: need z < 0, or z = 0 with x < 0")]
    InadmissibleStart { z: f64, x: f64 },

    #[error("acceptance probability at t_target = {t_target} is below {min}; largest feasible t_target is {largest_feasible:?}")]
    AcceptanceTooSmall { t_target: f64, min: f64, largest_feasible: Option<f64> },

    #[error("truncation budget exceeded: {fraction} > {budget} ({what})")]
    TruncationBudget { fraction: f64, budget: f64, what: String },

    #[error("formula regime violated: {0}")]
    Regime(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("thread pool error: {0}")]
    ThreadPool(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
