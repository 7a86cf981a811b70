use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("point {point:?} lies outside the interpolation domain")]
    OutsideDomain { point: Vec<f64> },

    #[error("point {point:?} is not on the boundary (signed distance {distance:e})")]
    NotOnBoundary { point: Vec<f64>, distance: f64 },

    #[error("point {point:?} at t = {t} is exterior to the space-time domain")]
    Exterior { point: Vec<f64>, t: f64 },

    #[error("time {t} is not aligned with the level grid (step {step})")]
    UnalignedTime { t: f64, step: f64 },

    #[error("token time {t} is below level 0 of the grid function")]
    BelowLevelZero { t: f64 },

    #[error("strategy returned a non-unit vector {direction:?}")]
    NonUnitDirection { direction: Vec<f64> },

    #[error("iteration limit {max_iter} reached with residual {residual:e}")]
    MaxIterations { max_iter: usize, residual: f64 },

    #[error("lattice mismatch between grid functions")]
    LatticeMismatch,

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Numerical failures (as opposed to invalid input) map to a distinct
    /// process exit status in the command-line front-end.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::OutsideDomain { .. }
                | Error::MaxIterations { .. }
                | Error::BelowLevelZero { .. }
                | Error::NonUnitDirection { .. }
        )
    }
}
