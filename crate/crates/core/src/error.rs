use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("overdamped acoustic mode at |xi| = {xi_norm}, epsilon = {epsilon} (discriminant {discriminant:e} <= 0)")]
    Overdamped {
        xi_norm: f64,
        epsilon: f64,
        discriminant: f64,
    },

    #[error("step rejected at t = {time}: {reason} (field extremum {extremum:e})")]
    StepRejected {
        time: f64,
        reason: String,
        extremum: f64,
    },

    #[error("quadrature did not reach the target accuracy: estimate {achieved:e}, target {target:e}")]
    Quadrature { achieved: f64, target: f64 },

    #[error("fit error: {0}")]
    Fit(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
