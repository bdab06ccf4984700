use thiserror::Error;

/// Errors raised by the numerical operations in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported capability: {0}")]
    Capability(String),

    #[error("integration failed at r = {r}: step {step:e} fell below the minimum")]
    IntegrationFailure { r: f64, step: f64 },

    #[error("range error: {0}")]
    Range(String),

    #[error("fit is not identifiable: singular value ratio {ratio:e}")]
    Identifiability { ratio: f64 },

    #[error("no convergence after {iterations} iterations (best defect {best_defect:e})")]
    NonConvergence {
        iterations: usize,
        best_defect: f64,
        best: Box<crate::rotation::RotationFieldSet>,
    },

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("precision error: estimate {estimate:e} exceeds tolerance {tolerance:e}")]
    Precision { estimate: f64, tolerance: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("region validity: {0}")]
    RegionValidity(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
