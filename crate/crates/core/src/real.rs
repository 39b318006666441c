use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst};
use rustfft::FftNum;

/// Scalar type the numerics are written against. Implemented for `f32` and `f64`.
pub trait Real: Float + FloatConst + FftNum + Debug + Display + LowerExp + Default + Sum {
    /// Converts a literal. Every `f64` constant used by the crate is representable in `f32`.
    fn lit(x: f64) -> Self;

    fn of_usize(n: usize) -> Self {
        Self::lit(n as f64)
    }

    fn as_f64(self) -> f64;
}

impl Real for f32 {
    #[inline]
    fn lit(x: f64) -> Self {
        x as f32
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    #[inline]
    fn lit(x: f64) -> Self {
        x
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}
