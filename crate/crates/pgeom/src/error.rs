//! Crate-wide error type for geometry operations.

use crate::expr::EvalError;

#[derive(Debug, thiserror::Error)]
pub enum GeomError {
    #[error("evaluation failed at sample point {point:?}: {source}")]
    EvalAt {
        point: Vec<f64>,
        #[source]
        source: EvalError,
    },

    #[error("invalid chart: {0}")]
    InvalidChart(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("symbolic inversion is limited to dimension <= 4, got {0}")]
    DimensionTooLarge(usize),

    #[error("cometric is singular at sample point {point:?} (|det| = {det:e})")]
    SingularAtPoint { point: Vec<f64>, det: f64 },

    #[error(
        "cometric is not positive definite at sample point {point:?} \
         (leading minor {minor} has determinant {value:e})"
    )]
    NotPositiveDefinite {
        point: Vec<f64>,
        minor: usize,
        value: f64,
    },

    #[error("empty sample plan requested: count must be >= 1")]
    EmptySamplePlan,

    #[error("coordinate name `{0}` appears in both warped-product factors")]
    NameCollision(String),

    #[error("warp function is not positive on the base domain: f = {value} at {point:?}")]
    NonPositiveWarp { point: Vec<f64>, value: f64 },

    #[error("warp function references coordinate index {index}, outside the base chart (dim {base_dim})")]
    WarpUsesFiberCoordinate { index: usize, base_dim: usize },
}

impl GeomError {
    pub(crate) fn eval_at(point: &[f64], source: EvalError) -> Self {
        GeomError::EvalAt {
            point: point.to_vec(),
            source,
        }
    }
}
