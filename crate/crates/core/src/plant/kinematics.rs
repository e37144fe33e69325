//! Constant-curvature tip kinematics of the steerable section.

use super::geometry::BalloonGeometry;
use crate::scalar::Real;

/// Below this bend (radians) the arc is evaluated by its series expansion.
const SMALL_BEND_RAD: f64 = 1e-6;

/// Tip position `[x, y, z]` in mm for bend `alpha_deg` and roll `roll_deg`.
///
/// The steerable section of length `l2` is treated as a circular arc. The
/// base frame has `z` along the undeflected axis; roll rotates the bending
/// plane about `z`.
pub fn tip_pose<T: Real>(alpha_deg: T, roll_deg: T, geometry: &BalloonGeometry<T>) -> [T; 3] {
    let length = geometry.l2_mm;
    let alpha = alpha_deg.to_radians();
    let (in_plane, axial) = if alpha.abs() < T::lit(SMALL_BEND_RAD) {
        // r = L a/2 - L a^3/24, z = L - L a^2/6
        let a2 = alpha * alpha;
        (
            length * alpha / T::lit(2.0) * (T::one() - a2 / T::lit(12.0)),
            length * (T::one() - a2 / T::lit(6.0)),
        )
    } else {
        let radius = length / alpha;
        let half = (alpha / T::lit(2.0)).sin();
        (radius * T::lit(2.0) * half * half, radius * alpha.sin())
    };
    let roll = roll_deg.to_radians();
    [in_plane * roll.cos(), in_plane * roll.sin(), axial]
}
