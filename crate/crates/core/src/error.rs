use thiserror::Error;

/// Errors produced by the tippe top model, its integrators and analyses.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParams { field: &'static str, reason: String },

    #[error("parameters are already dimensionless")]
    AlreadyDimensionless,

    #[error("dry sliding friction requires the normal force")]
    MissingNormalForce,

    #[error("normal force must be non-negative, got {0}")]
    NegativeNormalForce(f64),

    #[error("reduced chart is singular at gamma3 = {gamma3} (pole band {band:e})")]
    ChartSingular { gamma3: f64, band: f64 },

    #[error("no permanent rotations exist for i1 = i3")]
    NoFamily,

    #[error("c1 = {c1} is outside the family domain |c1| > c0 = {c0}")]
    OutsideFamily { c1: f64, c0: f64 },

    #[error("singular linear system in {0}")]
    SingularSystem(&'static str),

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },

    #[error("step budget of {0} exhausted")]
    TooManySteps(usize),

    #[error("invalid integrator config: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
