//! Error type shared across the toolkit.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid plant: {0}")]
    InvalidPlant(String),

    #[error("invalid gains: {0}")]
    InvalidGains(String),

    #[error("invalid tuning: {0}")]
    InvalidTuning(String),

    #[error("grid mismatch: expected {expected} nodes, got {got}")]
    GridMismatch { expected: usize, got: usize },

    #[error("grid too coarse: need at least {needed} subintervals, got {got}")]
    GridTooCoarse { needed: usize, got: usize },

    #[error("Halanay hypothesis violated: delta1 {delta1} > delta0 {delta0}")]
    HalanayHypothesis { delta0: f64, delta1: f64 },

    #[error("matrix not symmetric: off-diagonal deviation {deviation}")]
    AsymmetricMatrix { deviation: f64 },

    #[error("CFL violated: dt {dt} exceeds dx^2/2 = {limit}")]
    CflViolation { dt: f64, limit: f64 },

    #[error("delayed lookup at t = {t} reaches {lag} beyond the stored window")]
    DelayOutOfRange { t: f64, lag: f64 },

    #[error("certificate is not feasible: {0}")]
    InfeasibleCertificate(&'static str),

    #[error("Neumann membership requires the derivative norm of the initial field")]
    MissingDerivativeNorm,

    #[error("control law has no kernels attached ({0})")]
    MissingKernels(&'static str),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
