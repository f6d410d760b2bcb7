//! Floating-point scalar abstraction shared by every numerical module.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar used for operators, frames, fields and grids.
///
/// Implemented for `f32` and `f64`. The tolerances are scaled to the
/// precision of the type so that the same algorithms run in either width.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + nalgebra::Scalar
    + Send
    + Sync
    + 'static
{
    /// Default tolerance for symmetry and orthonormality checks.
    fn structural_tolerance() -> Self;

    /// Threshold under which a computed quantity counts as zero.
    fn zero_threshold() -> Self;

    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant representable in scalar type")
    }

    #[inline]
    fn of_usize(x: usize) -> Self {
        Self::from_usize(x).expect("integer representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    fn structural_tolerance() -> Self {
        1e-12
    }
    fn zero_threshold() -> Self {
        1e-13
    }
}

impl Real for f32 {
    fn structural_tolerance() -> Self {
        1e-5
    }
    fn zero_threshold() -> Self {
        1e-6
    }
}
