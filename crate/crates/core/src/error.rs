use thiserror::Error;

use crate::kinetics::DecayFit;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{quantity} = {value:e} outside admissible interval [{min:e}, {max:e}]")]
    OutOfRange {
        quantity: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no phase-matching solution: {0}")]
    NoSolution(String),

    /// The tuning curve has a vertical tangent (or ends) at the requested point.
    #[error("derivative undefined at tuning-curve edge: {0}")]
    DerivativeUndefined(String),

    #[error("model validity: {0}")]
    ModelValidity(String),

    #[error("integration step {step:e} s too large for stability; use at most {max_step:e} s")]
    Stability { step: f64, max_step: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    /// Normal equations of the bi-exponential fit are singular. `fallback`
    /// holds the constant-plus-zero-amplitude fit; a single exponential
    /// refit is the usual remedy.
    #[error("rank-deficient normal equations; refit with a single exponential")]
    RankDeficient { fallback: Box<DecayFit> },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("configuration: {0}")]
    Config(String),
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numeric_failure(&self) -> bool {
        matches!(
            self,
            Error::NoSolution(_)
                | Error::DerivativeUndefined(_)
                | Error::RankDeficient { .. }
                | Error::Numeric(_)
        )
    }
}
