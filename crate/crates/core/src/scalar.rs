//! Scalar abstraction. Every solver in the crate is generic over the
//! floating-point type through [`Real`]; `f64` aliases for the main types are
//! exported at the crate root.

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};
use rustfft::FftNum;
use std::iter::Sum;

/// Floating-point scalar usable by every solver in the crate.
///
/// `f32` satisfies the bounds, but the tolerances quoted on the individual
/// operations assume `f64`; single precision is for memory-bound sweeps, not
/// for acceptance-grade runs.
pub trait Real: Float + FloatConst + FromPrimitive + NumAssign + Sum<Self> + FftNum {
    /// Error function, full relative accuracy over the whole line.
    fn erf(self) -> Self;
    /// Complementary error function, relatively accurate in the far tail.
    fn erfc(self) -> Self;
}

impl Real for f32 {
    fn erf(self) -> f32 {
        libm::erff(self)
    }
    fn erfc(self) -> f32 {
        libm::erfcf(self)
    }
}

impl Real for f64 {
    fn erf(self) -> f64 {
        libm::erf(self)
    }
    fn erfc(self) -> f64 {
        libm::erfc(self)
    }
}

/// Pulls an `f64` literal into the working precision.
#[inline]
pub fn real<T: Real>(v: f64) -> T {
    T::from_f64(v).expect("literal representable in target precision")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn erfc_tail_keeps_relative_accuracy() {
        // erfc(x) ~ exp(-x^2)/(x sqrt(pi)) * (1 - 1/(2x^2) + 3/(4x^4) - ...)
        let x = 8.0f64;
        let asymptotic = (-x * x).exp() / (x * f64::PI().sqrt())
            * (1.0 - 0.5 / (x * x) + 0.75 / (x * x * x * x));
        let got = Real::erfc(x);
        assert!((got - asymptotic).abs() / asymptotic < 1e-4);
        assert!(got > 0.0);
    }

    #[test]
    fn erf_matches_f32_and_f64() {
        let v64 = Real::erf(0.7f64);
        let v32 = Real::erf(0.7f32);
        assert!((v64 as f32 - v32).abs() < 1e-6);
    }
}
