use serde::Serialize;
use thiserror::Error;

/// Failure modes shared by every module of the crate.
///
/// The variants serialize with a `kind` tag so that the experiment runner can
/// emit them verbatim as an error payload.
#[derive(Debug, Clone, Error, Serialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Error {
    #[error("invalid argument: {message}")]
    InvalidArgument { message: String },

    #[error("unsupported: {message}")]
    Unsupported { message: String },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    ConvergenceFailure { iterations: usize, residual: f64 },

    #[error("state is not a translation eigenvector: |<psi, T psi>| = {overlap}")]
    NotAnEigenvector { overlap: f64 },

    #[error("spectral gap closes at {location}: gap = {gap:e}")]
    GapClosure { location: String, gap: f64 },

    #[error("plaquette phase sum {value} is not quantized (deviation {deviation})")]
    NonQuantized { value: f64, deviation: f64 },

    #[error("transported overlap {overlap} is too small for a reliable phase")]
    UnreliablePhase { overlap: f64 },

    #[error("LAPACK routine {routine} failed with info = {info}")]
    Lapack { routine: &'static str, info: i32 },
}

impl Error {
    pub fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidArgument { message: message.into() }
    }

    pub fn unsupported(message: impl Into<String>) -> Self {
        Error::Unsupported { message: message.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
