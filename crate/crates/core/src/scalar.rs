use std::fmt::{Debug, Display};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive};
use rustfft::FftNum;

/// Floating-point scalar the signal chain is generic over: `f32` or `f64`.
pub trait Real: Float + FloatConst + FromPrimitive + FftNum + Debug + Display + Default {
    /// Converts an `f64` literal. Infallible for the implementing types.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(x: usize) -> Self {
        Self::from_usize(x).expect("usize representable")
    }

    #[inline]
    fn two_pi() -> Self {
        Self::TAU()
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Wraps an angle into (-π, π].
pub fn wrap_angle<T: Real>(x: T) -> T {
    let tau = T::TAU();
    let m = ((T::PI() - x) / tau).floor();
    x + m * tau
}

/// Unit phasor `e^{jθ}`.
#[inline]
pub fn cis<T: Real>(theta: T) -> Complex<T> {
    Complex::new(theta.cos(), theta.sin())
}
