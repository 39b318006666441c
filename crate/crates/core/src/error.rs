use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("shape mismatch: expected {expected} samples, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("state has zero mass or zero kinetic energy")]
    ZeroState,

    #[error("cutoff support 2R = {support} exceeds the grid extent {extent}")]
    DomainTooSmall { support: f64, extent: f64 },

    #[error("ground states need omega > 0 and gamma + 2 omega > 0 (omega = {omega}, gamma = {gamma})")]
    InvalidFrequency { omega: f64, gamma: f64 },

    #[error("initial guess has nonpositive interaction P = {0}")]
    NonpositiveP(f64),

    #[error("ground state did not converge")]
    NotConverged,

    #[error("profile tail is below the noise floor on the fit window")]
    TailBelowFloor,

    #[error("no zero crossing of the Pohozaev functional: P = {0}")]
    NoZeroCrossing(f64),

    #[error("non-finite sample produced by the time step")]
    NonFinite,

    #[error("parameter mismatch: {0}")]
    ParamsMismatch(String),

    #[error("profile format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
