//! Scalar abstraction shared by the numeric modules.
//!
//! Everything below the experiment layer is generic over [`Scalar`], which is
//! implemented for `f32` and `f64`. The crate root re-exports `f64` aliases for
//! the common types.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real scalar usable throughout the pipeline: f32 or f64.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Residual target for the implicit PV current solve, in amperes.
    fn current_tolerance() -> Self;

    /// Converts an `f64` literal. Panics only for values the type cannot hold,
    /// which never happens for the finite constants used in this crate.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    fn current_tolerance() -> Self {
        1e-10
    }
}

impl Scalar for f32 {
    fn current_tolerance() -> Self {
        1e-6
    }
}
