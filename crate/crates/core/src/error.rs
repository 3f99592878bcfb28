use thiserror::Error;

use crate::experiment::FitResult;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("mask shape `{0}` has no closed-form Fourier transform")]
    UnsupportedShape(&'static str),

    #[error(
        "quadrature step {step:e} m exceeds the phase-sampling bound {bound:e} m \
         for detector radius {detector_radius:e} m"
    )]
    Resolution {
        step: f64,
        bound: f64,
        detector_radius: f64,
    },

    #[error(
        "quadrature window half-extent {half_extent:e} m does not cover mask extent {required:e} m"
    )]
    WindowTooSmall { half_extent: f64, required: f64 },

    #[error("4D quadrature needs {samples} samples, over the budget of {budget}")]
    CostBudget { samples: u128, budget: u128 },

    #[error("{0} not found inside the scanned range")]
    NotFound(&'static str),

    #[error("invalid metrics: {0}")]
    InvalidMetrics(String),

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("insufficient data for fit: {0}")]
    InsufficientData(String),

    #[error("fit did not converge after {iterations} iterations")]
    FitDiverged {
        iterations: usize,
        last: Box<FitResult>,
    },

    #[error("pixel grid parse error on line {line}: {reason}")]
    GridParse { line: usize, reason: String },
}

pub(crate) fn ensure_finite(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("must be finite, got {value}"),
        })
    }
}

pub(crate) fn ensure_positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("must be finite and positive, got {value}"),
        })
    }
}
