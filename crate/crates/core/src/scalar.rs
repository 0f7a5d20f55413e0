use std::fmt::{Debug, Display};
use std::iter::Sum;

use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::{Float, FromPrimitive, NumAssign};

/// Floating-point scalar the crate is generic over: `f32` or `f64`.
///
/// `f64` is the default everywhere and the recommended choice; the banded
/// solves are well conditioned but image-sized sums lose too much in `f32`
/// for the tightest tolerances.
pub trait Scalar:
    Float
    + FromPrimitive
    + NumAssign
    + Sum
    + ScalarOperand
    + LinalgScalar
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from a count; counts in this crate are pixel or
    /// index counts and always fit a float mantissa in practice.
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable as scalar")
    }

    fn two() -> Self {
        Self::one() + Self::one()
    }

    fn half() -> Self {
        Self::one() / Self::two()
    }
}

impl<T> Scalar for T where
    T: Float
        + FromPrimitive
        + NumAssign
        + Sum
        + ScalarOperand
        + LinalgScalar
        + Debug
        + Display
        + Send
        + Sync
        + 'static
{
}
