use thiserror::Error;

/// Errors produced by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("analytic and numeric eigenvalues disagree (relative deviation {0:e})")]
    EigenMismatch(f64),

    #[error("spectrum is flat: no dip above the noise floor")]
    FlatSpectrum,

    #[error("fit did not converge within {iterations} iterations")]
    FitDiverged { iterations: usize },

    #[error("normal matrix is singular")]
    SingularNormalMatrix,

    #[error("residual evaluation produced a non-finite value")]
    NonFiniteResidual,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("value {value} lies outside the calibration band [{low}, {high}]")]
    OutOfCalibrationRange { value: f64, low: f64, high: f64 },

    #[error("calibration model is not monotone over its fit range")]
    NonMonotoneModel,

    #[error("temperature {t} K lies outside the model fit range [{t_min}, {t_max}] K")]
    RangeMismatch { t: f64, t_min: f64, t_max: f64 },

    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
