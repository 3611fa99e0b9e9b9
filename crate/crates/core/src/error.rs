use thiserror::Error;

/// Errors raised by the simulation core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid initial datum: {0}")]
    InvalidDatum(String),

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("invalid velocity model: {0}")]
    InvalidModel(String),

    #[error("invalid scheme: {0}")]
    InvalidScheme(String),

    #[error("invalid sweep plan: {0}")]
    InvalidPlan(String),

    #[error("numerical instability at step {step} (t = {time}): {detail}")]
    Instability {
        step: usize,
        time: f64,
        detail: String,
    },

    #[error("mismatched operands: {0}")]
    Mismatch(String),

    #[error("i/o failure: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
