//! Scalar abstractions shared by the numeric modules.
//!
//! Continuous math (interpolation, kinematics, fitting, root finding) is
//! written against [`Real`], which is implemented for `f32` and `f64`.
//! Routines that only need field arithmetic (the Savitzky-Golay weight
//! solver) are written against [`Field`] so they also run on exact
//! rationals such as `num_rational::Ratio<i64>`.

use std::fmt::{Debug, Display};
use std::ops::Neg;

use num_traits::{Float, FloatConst, FromPrimitive, Num, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Exact or inexact field arithmetic with an ordering.
pub trait Field: Clone + Num + Neg<Output = Self> + PartialOrd + FromPrimitive + Debug {
    #[inline]
    fn from_int(v: i64) -> Self {
        Self::from_i64(v).expect("integer representable in field")
    }

    #[inline]
    fn abs_val(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }
}

impl<T> Field for T where T: Clone + Num + Neg<Output = T> + PartialOrd + FromPrimitive + Debug {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lit_round_trips_f32_and_f64() {
        assert_eq!(<f64 as Real>::lit(0.25), 0.25);
        assert_eq!(<f32 as Real>::lit(0.25), 0.25f32);
    }

    #[test]
    fn field_abs() {
        assert_eq!((-3i64).abs_val(), 3);
        assert_eq!(<f64 as Field>::from_int(-2).abs_val(), 2.0);
    }
}
