use serde::{Deserialize, Serialize};

use super::PlantError;
use crate::scalar::Real;

/// Upper bound on the collapsed outer diameter for sheath delivery, mm.
pub const MAX_COLLAPSED_OD_MM: f64 = 5.0;

/// Tuned balloon dimensions, all in millimetres.
///
/// `t*` are wall thicknesses, `d*` inner diameters and `l*` section lengths.
/// `l2` is the steerable section and drives the tip kinematics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct BalloonGeometry<T> {
    /// Proximal section thickness.
    pub t1_mm: T,
    /// Top steerable section thickness.
    pub t2_mm: T,
    /// Bottom steerable section thickness.
    pub t3_mm: T,
    /// Bottom optical window thickness.
    pub t4_mm: T,
    /// Top optical face thickness.
    pub t5_mm: T,
    /// Bottom optical face thickness.
    pub t6_mm: T,
    /// Proximal section inner diameter.
    pub d1_mm: T,
    /// Distal neck inner diameter.
    pub d2_mm: T,
    /// Proximal section length.
    pub l1_mm: T,
    /// Steerable section length.
    pub l2_mm: T,
    /// Optical window length.
    pub l3_mm: T,
    /// Optical face length.
    pub l4_mm: T,
    /// Straight clip to angled clip distance.
    pub l5_mm: T,
    /// Angled clip to optical face distance.
    pub l6_mm: T,
    /// Collapsed outer diameter (D1).
    pub collapsed_od_mm: T,
    /// Working channel inner diameter (D3).
    pub channel_id_mm: T,
    pub channel_wall_mm: T,
}

impl<T: Real> Default for BalloonGeometry<T> {
    fn default() -> Self {
        let l = T::lit;
        Self {
            t1_mm: l(0.27),
            t2_mm: l(0.80),
            t3_mm: l(0.90),
            t4_mm: l(0.80),
            t5_mm: l(0.50),
            t6_mm: l(0.75),
            d1_mm: l(4.09),
            d2_mm: l(1.75),
            l1_mm: l(10.0),
            l2_mm: l(15.0),
            l3_mm: l(7.50),
            l4_mm: l(1.90),
            l5_mm: l(5.00),
            l6_mm: l(4.00),
            collapsed_od_mm: l(4.63),
            channel_id_mm: l(1.0),
            channel_wall_mm: l(0.15),
        }
    }
}

impl<T: Real> BalloonGeometry<T> {
    pub fn validate(&self) -> Result<(), PlantError> {
        let dims = [
            ("t1_mm", self.t1_mm),
            ("t2_mm", self.t2_mm),
            ("t3_mm", self.t3_mm),
            ("t4_mm", self.t4_mm),
            ("t5_mm", self.t5_mm),
            ("t6_mm", self.t6_mm),
            ("d1_mm", self.d1_mm),
            ("d2_mm", self.d2_mm),
            ("l1_mm", self.l1_mm),
            ("l2_mm", self.l2_mm),
            ("l3_mm", self.l3_mm),
            ("l4_mm", self.l4_mm),
            ("l5_mm", self.l5_mm),
            ("l6_mm", self.l6_mm),
            ("collapsed_od_mm", self.collapsed_od_mm),
            ("channel_id_mm", self.channel_id_mm),
            ("channel_wall_mm", self.channel_wall_mm),
        ];
        for (name, v) in dims {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(PlantError::InvalidGeometry(format!("{name} must be positive, got {v}")));
            }
        }
        if self.t5_mm >= self.t6_mm {
            return Err(PlantError::InvalidGeometry(
                "top optical face (t5) must be thinner than bottom face (t6)".into(),
            ));
        }
        if self.t2_mm >= self.t3_mm {
            return Err(PlantError::InvalidGeometry(
                "top steerable wall (t2) must be thinner than bottom wall (t3)".into(),
            ));
        }
        if self.collapsed_od_mm > T::lit(MAX_COLLAPSED_OD_MM) {
            return Err(PlantError::InvalidGeometry(format!(
                "collapsed outer diameter {} mm exceeds {MAX_COLLAPSED_OD_MM} mm",
                self.collapsed_od_mm
            )));
        }
        Ok(())
    }
}
