use serde::{Deserialize, Serialize};

use super::ControlError;
use crate::scalar::Real;

/// Multi-threshold bang-bang map from pixel-ratio error to pump speed.
///
/// Cases are tested from the widest band down, so a magnitude sitting exactly
/// on a shared boundary takes the faster speed of the band above it, except
/// for the outermost threshold which is exclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct BangBangLaw<T> {
    /// Ascending error magnitudes, ratio units.
    pub thresholds: [T; 3],
    /// Ascending speeds, rpm.
    pub speeds_rpm: [T; 3],
}

impl<T: Real> Default for BangBangLaw<T> {
    fn default() -> Self {
        Self {
            thresholds: [T::lit(0.001), T::lit(0.002), T::lit(0.006)],
            speeds_rpm: [T::lit(5.0), T::lit(25.0), T::lit(100.0)],
        }
    }
}

impl<T: Real> BangBangLaw<T> {
    pub fn validate(&self) -> Result<(), ControlError> {
        let [t1, t2, t3] = self.thresholds;
        let [s1, s2, s3] = self.speeds_rpm;
        if !(T::zero() < t1 && t1 < t2 && t2 < t3) {
            return Err(ControlError::InvalidConfig(
                "thresholds must be positive and strictly increasing".into(),
            ));
        }
        if !(T::zero() < s1 && s1 < s2 && s2 < s3) {
            return Err(ControlError::InvalidConfig(
                "speeds must be positive and strictly increasing".into(),
            ));
        }
        Ok(())
    }

    pub fn rpm(&self, delta_p: T) -> T {
        if !delta_p.is_finite() || delta_p == T::zero() {
            return T::zero();
        }
        let [t1, t2, t3] = self.thresholds;
        let [s1, s2, s3] = self.speeds_rpm;
        let mag = delta_p.abs();
        let speed = if mag > t3 {
            s3
        } else if mag >= t2 {
            s2
        } else if mag >= t1 {
            s1
        } else {
            return T::zero();
        };
        speed * delta_p.signum()
    }
}

/// Default-law speed for a pixel-ratio error.
pub fn bang_bang_rpm<T: Real>(delta_p: T) -> T {
    BangBangLaw::default().rpm(delta_p)
}
