use thiserror::Error;

/// Errors raised by the curvature, flow and pinching routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("unsupported dimension {n}: {reason}")]
    UnsupportedDimension { n: usize, reason: &'static str },

    #[error("tensor is not symmetric (defect {defect:e})")]
    NotSymmetric { defect: f64 },

    #[error("metric is not positive definite")]
    NotPositiveDefinite,

    #[error("curvature symmetry `{which}` violated (defect {defect:e})")]
    CurvatureSymmetry { which: &'static str, defect: f64 },

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("point index {index} has no full stencil (interior points only)")]
    StencilOutOfRange { index: usize },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("internal consistency check failed: {0}")]
    Inconsistent(String),

    #[error("scalar curvature is not positive (R = {r:e})")]
    NonPositiveScalar { r: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("degenerate metric during flow at t = {t}")]
    Degenerate { t: f64 },
}

pub type Result<T> = std::result::Result<T, GeomError>;
