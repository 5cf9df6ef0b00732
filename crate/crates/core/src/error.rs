use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum DscError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: {what} (expected {expected}, got {got})")]
    DimensionMismatch { what: &'static str, expected: usize, got: usize },

    #[error(
        "calibration infeasible: zeta = {zeta} must exceed the weight ratio {ratio}; \
         re-exponentiate the weights (v_g = w_g^a with a in (0,1)) until the ratio drops below zeta"
    )]
    CalibrationInfeasible { zeta: f64, ratio: f64 },

    #[error("degenerate calibration: weights are uniform (ratio 1), beta is not identifiable")]
    DegenerateCalibration,

    #[error("distribution undefined: {0}")]
    UndefinedDistribution(String),

    #[error("bound violation: {0}")]
    BoundViolation(String),

    #[error("invalid bus line {line}: {reason}")]
    InvalidLine { line: String, reason: String },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("routing error on leg {leg}: {reason}")]
    Routing { leg: usize, reason: String },

    #[error("no route between grids {from} and {to}")]
    NoRoute { from: usize, to: usize },

    #[error("no feasible destination within {radius_km} km")]
    EmptySearch { radius_km: f64 },

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("missing file: {}", .0.display())]
    MissingFile(PathBuf),

    #[error("parse error in {}: {message}", .path.display())]
    Parse { path: PathBuf, message: String },

    #[error("io error at {}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = DscError> = std::result::Result<T, E>;

impl DscError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        DscError::Io { path: path.into(), source }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        DscError::Parse { path: path.into(), message: message.to_string() }
    }
}
