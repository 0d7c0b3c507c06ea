use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("no bracket: speed interval [{lo}, {hi}] does not straddle the front speed")]
    NoBracket { lo: f64, hi: f64 },

    #[error("stiff failure: step size fell below {min_step:e} at s = {at}")]
    StiffFailure { min_step: f64, at: f64 },

    #[error("hypothesis fails at u = {u}: {detail}")]
    HypothesisFails { u: f64, detail: String },

    #[error("not ignition: f0 = {value:e} at u = {u} inside (0, theta0)")]
    NotIgnition { u: f64, value: f64 },

    #[error("sampled (H) check failed: {0}")]
    SampledCheck(String),

    #[error("bad epsilon0: F0(1 - eps0) = {top} does not exceed max F0 = {max} below it")]
    BadEpsilon0 { top: f64, max: f64 },

    #[error("non-finite value at node {node}, t = {t}")]
    NonFinite { node: usize, t: f64 },

    #[error("window breach at t = {t}: boundary deviates by {deviation:e}")]
    WindowBreach { t: f64, deviation: f64 },

    #[error("window growth exceeded cap of {cap} nodes")]
    WindowCap { cap: usize },

    #[error("insufficient samples: need {need}, have {have}")]
    InsufficientSamples { need: usize, have: usize },

    #[error("insufficient horizon: {0}")]
    InsufficientHorizon(String),

    #[error("calibration cap reached: {0}")]
    CalibrationCap(String),

    #[error("no propagation: {0}")]
    NoPropagation(String),

    #[error("inconclusive: {0}")]
    Inconclusive(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
