//! Scalar abstraction for the numerical core.
//!
//! Everything downstream is generic over [`Real`]: an IEEE floating point
//! type with LAPACK kernels behind it. `f32` satisfies the trait, but the
//! tolerances used by the shipped models are calibrated for `f64`.

use ndarray::ScalarOperand;
use ndarray_linalg::{Lapack, Scalar};

/// Real scalar usable by the dense linear algebra core: `f32` or `f64`.
pub trait Real:
    Scalar<Real = Self>
    + Lapack
    + ScalarOperand
    + PartialOrd
    + num_traits::FromPrimitive
    + Send
    + Sync
{
    /// Lift an `f64` constant (tolerances, physical parameters).
    fn of(x: f64) -> Self;
    /// Lossy view as `f64`, for reporting.
    fn as_f64(self) -> f64;
    /// Machine epsilon of the concrete type.
    fn eps() -> Self;
    /// A pinned structural tolerance, floored at a multiple of the scalar's
    /// epsilon so the same code stays usable at lower precision. At `f64`
    /// the pinned value always dominates.
    fn tol(pinned: f64, eps_multiple: f64) -> Self {
        let a = Self::of(pinned);
        let b = Self::of(eps_multiple) * Self::eps();
        if a > b {
            a
        } else {
            b
        }
    }
}

macro_rules! impl_real {
    ($t:ty) => {
        impl Real for $t {
            #[inline]
            fn of(x: f64) -> Self {
                x as $t
            }
            #[inline]
            fn as_f64(self) -> f64 {
                self as f64
            }
            #[inline]
            fn eps() -> Self {
                <$t>::EPSILON
            }
        }
    };
}

impl_real!(f32);
impl_real!(f64);
