//! Scalar abstraction: every numeric kernel in this crate is generic over
//! [`Real`], instantiated as `f32` or `f64`. Concrete aliases at the crate
//! root fix `f64` for the simulator, mission layer, and harness.

use std::fmt::Display;
use std::iter::Sum;

/// Floating-point scalar used by the geometric and optimization kernels.
pub trait Real:
    nalgebra::RealField + num_traits::FromPrimitive + num_traits::ToPrimitive + Copy + Default + Display + Sum
{
    /// Lossy conversion from an `f64` constant.
    fn of(v: f64) -> Self {
        num_traits::FromPrimitive::from_f64(v).expect("literal not representable")
    }

    /// Lossy conversion back to `f64`, for logging and export.
    fn as_f64(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).expect("scalar not convertible to f64")
    }

    fn pos_inf() -> Self {
        Self::of(f64::INFINITY)
    }

    fn neg_inf() -> Self {
        Self::of(f64::NEG_INFINITY)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Shorthand for `T::of(v)`; reads better at call sites with inference.
pub fn real<T: Real>(v: f64) -> T {
    T::of(v)
}
