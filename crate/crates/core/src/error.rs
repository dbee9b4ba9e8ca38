//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not antisymmetric: max |ω + ωᵀ| = {max_violation:e}")]
    NonAntisymmetric { max_violation: f64 },

    #[error("matrix is not symmetric: max |Q − Qᵀ| = {max_violation:e}")]
    NonSymmetric { max_violation: f64 },

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("subspace basis columns are not orthonormal: max |BᵀB − I| = {max_violation:e}")]
    NonOrthonormalBasis { max_violation: f64 },

    #[error("constraint chain emptied: the affine constraint system is inconsistent (no admissible Cauchy data)")]
    EmptyFinalManifold,

    #[error("pre-symplectic constraint algorithm did not stabilize within {max_iter} iterations")]
    NoConvergence { max_iter: usize },

    #[error("Ω_∞ is degenerate and no horizontal projector was supplied")]
    DegenerateWithoutConnection,

    #[error("covector does not annihilate ker Ω_∞ (overlap {overlap:e}); the observable is gauge-variant")]
    InconsistentCovector { overlap: f64 },

    #[error("connection requested for a Symplectic chain result")]
    NotGauge,

    #[error("ker Ω_∞ does not match the discrete gradient block: {detail}")]
    KernelMismatch { detail: String },

    #[error("array shape mismatch in {context}: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        context: &'static str,
        expected: Vec<usize>,
        got: Vec<usize>,
    },

    #[error("time index {index} out of range (time extent {extent})")]
    IndexOutOfRange { index: usize, extent: usize },

    #[error("curve length {got} does not match time extent {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("unsupported field theory for this operation: {0}")]
    UnsupportedSpec(String),

    #[error("gauge-classified system: a connection projector is required")]
    MissingProjector,

    #[error("flow generator is not diagonalizable; use the leapfrog fallback")]
    NonDiagonalizable,

    #[error("observable coefficients overlap ker Ω_∞ (|c·k| = {overlap:e}); gauge-variant observable")]
    GaugeVariantObservable { overlap: f64 },

    #[error("state is not horizontal: ‖P z‖ = {residual:e} exceeds {tolerance:e}")]
    NotHorizontal { residual: f64, tolerance: f64 },

    #[error("observable time {t} outside the evolution window [{t_min}, {t_max}]")]
    OutOfWindow { t: f64, t_min: f64, t_max: f64 },

    #[error("linear algebra backend error: {0}")]
    Linalg(String),

    #[error("invalid value for {field}: {reason}")]
    InvalidValue { field: String, reason: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}
