//! Scalar abstraction shared by the transform, precision and bound primitives.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real scalar usable by the generic numeric core.
///
/// Implemented for `f32` and `f64`. The Monte Carlo layers run on `f64`
/// (see [`crate::Real`]); the transforms and closed forms accept either.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Tolerance used to classify imaginary residue after an inverse transform
    /// and to check conjugate symmetry.
    fn symmetry_tolerance() -> Self;

    /// Converts an `f64` constant, panicking only for non-representable input.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    fn from_usize_exact(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable in scalar type")
    }
}

impl Scalar for f64 {
    fn symmetry_tolerance() -> Self {
        1e-9
    }
}

impl Scalar for f32 {
    // single precision cannot resolve 1e-9 on unit-scale data
    fn symmetry_tolerance() -> Self {
        1e-4
    }
}
