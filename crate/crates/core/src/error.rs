use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("regulatory function evaluated at negative concentration {0}")]
    NegativeInput(f64),

    #[error("value {y} outside the invertible range [{lo}, {hi})")]
    OutOfRange { y: f64, lo: f64, hi: f64 },

    #[error("generalized inverse requires a non-decreasing regulatory function")]
    NotIncreasing,

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("coupling weights are not symmetric at ({i}, {j})")]
    AsymmetricWeights { i: usize, j: usize },

    #[error("coupling weight at ({i}, {j}) is negative or non-finite")]
    NegativeWeight { i: usize, j: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("state component {index} is negative ({value})")]
    NegativeState { index: usize, value: f64 },

    #[error("initial state leaves the invariant box [0, {x1_max}] x [0, {x2_max}] per compartment by {excursion}")]
    OutsideInvariantBox { excursion: f64, x1_max: f64, x2_max: f64 },

    #[error("both regulatory functions are unbounded; no invariant box exists")]
    BothUnbounded,

    #[error("assumption violated: {0}")]
    AssumptionViolated(String),

    #[error("operation requires g1 = piecewise-affine activator and g2 = identity")]
    NotPwaSubclass,

    #[error("adaptive step fell below {min_step:e} at t = {t}")]
    StepUnderflow { t: f64, min_step: f64 },

    #[error("integration produced a non-finite state at t = {t}")]
    NonFiniteState { t: f64 },

    #[error("domain code is not saturated")]
    NotSaturated,

    #[error("closed form requires a homogeneous all-to-all topology")]
    NotAllToAll,

    #[error("activation m = {m} must lie in 1..={max}")]
    InvalidActivation { m: usize, max: usize },

    #[error("reduced residual requires g2 = identity")]
    ReductionUnavailable,

    #[error("3^{n} domains exceeds the enumeration cap (n <= {cap}); raise the cap explicitly")]
    TooManyDomains { n: usize, cap: usize },

    #[error("invalid density function: {0}")]
    InvalidDensity(String),

    #[error("configuration error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}
