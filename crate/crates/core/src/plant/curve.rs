//! Volume-to-shape response of the balloon.
//!
//! Face diameter and free bend angle are each interpolated through a set of
//! measured (or constraint-derived) anchors with a shape-preserving monotone
//! cubic (Fritsch-Carlson slopes with the Fritsch-Butland harmonic mean).
//! The interpolant never overshoots its anchors, so the flat zero-angle run
//! during face deployment stays exactly zero.

use serde::{Deserialize, Serialize};

use super::PlantError;
use crate::scalar::Real;

/// Face diameter the optical window must reach before any bending, mm.
pub const MIN_DEPLOYED_FACE_MM: f64 = 8.0;
/// Largest acceptable optical face diameter, mm.
pub const MAX_FACE_MM: f64 = 11.0;
/// Volume span every response curve must cover, mL.
pub const CURVE_SPAN_ML: f64 = 4.0;
/// Sampling resolution used to check curve invariants, mL.
pub const INVARIANT_STEP_ML: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Anchor<T> {
    pub volume_ml: T,
    pub face_diameter_mm: T,
    pub free_angle_deg: T,
}

impl<T: Real> Anchor<T> {
    fn new(volume_ml: f64, face_diameter_mm: f64, free_angle_deg: f64) -> Self {
        Self {
            volume_ml: T::lit(volume_ml),
            face_diameter_mm: T::lit(face_diameter_mm),
            free_angle_deg: T::lit(free_angle_deg),
        }
    }
}

/// One interpolated channel: knots, values and Hermite slopes.
#[derive(Debug, Clone, PartialEq)]
struct MonotoneCubic<T> {
    xs: Vec<T>,
    ys: Vec<T>,
    slopes: Vec<T>,
}

impl<T: Real> MonotoneCubic<T> {
    fn new(xs: Vec<T>, ys: Vec<T>) -> Self {
        let n = xs.len();
        let h: Vec<T> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<T> = (0..n - 1).map(|k| (ys[k + 1] - ys[k]) / h[k]).collect();
        let mut slopes = vec![T::zero(); n];
        if n == 2 {
            slopes[0] = delta[0];
            slopes[1] = delta[0];
        } else {
            let two = T::lit(2.0);
            for k in 1..n - 1 {
                let (d0, d1) = (delta[k - 1], delta[k]);
                if d0 == T::zero() || d1 == T::zero() || d0.signum() != d1.signum() {
                    slopes[k] = T::zero();
                } else {
                    let w1 = two * h[k] + h[k - 1];
                    let w2 = h[k] + two * h[k - 1];
                    slopes[k] = (w1 + w2) / (w1 / d0 + w2 / d1);
                }
            }
            slopes[0] = end_slope(h[0], h[1], delta[0], delta[1]);
            slopes[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        }
        Self { xs, ys, slopes }
    }

    fn eval(&self, x: T) -> T {
        let n = self.xs.len();
        // Last segment whose left knot is <= x.
        let k = match self.xs.partition_point(|&xi| xi <= x) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        };
        let (x0, x1) = (self.xs[k], self.xs[k + 1]);
        let h = x1 - x0;
        let t = (x - x0) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let two = T::lit(2.0);
        let three = T::lit(3.0);
        let h00 = two * t3 - three * t2 + T::one();
        let h10 = t3 - two * t2 + t;
        let h01 = three * t2 - two * t3;
        let h11 = t3 - t2;
        h00 * self.ys[k] + h10 * h * self.slopes[k] + h01 * self.ys[k + 1] + h11 * h * self.slopes[k + 1]
    }
}

/// Non-centred three-point end slope, limited to preserve shape.
fn end_slope<T: Real>(h0: T, h1: T, d0: T, d1: T) -> T {
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let d = ((two * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d.signum() != d0.signum() || d0 == T::zero() {
        T::zero()
    } else if d0.signum() != d1.signum() && d.abs() > (three * d0).abs() {
        three * d0
    } else {
        d
    }
}

/// Face diameter and free (unloaded) bend angle as functions of infused volume.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseCurve<T> {
    anchors: Vec<Anchor<T>>,
    face_deploy_volume_ml: T,
    diameter: MonotoneCubic<T>,
    angle: MonotoneCubic<T>,
}

impl<T: Real> ResponseCurve<T> {
    /// Default anchors: the constrained points (face fully deployed to 8 mm at
    /// 0.8 mL, about 100 degrees at 4 mL) plus fill-in values chosen to respect
    /// every decoupling constraint.
    pub fn default_anchors() -> Vec<Anchor<T>> {
        vec![
            Anchor::new(0.0, 4.6, 0.0),
            Anchor::new(0.4, 6.5, 0.0),
            Anchor::new(0.8, 8.0, 0.0),
            Anchor::new(1.5, 8.5, 25.0),
            Anchor::new(2.4, 8.9, 60.0),
            Anchor::new(4.0, 9.5, 100.0),
        ]
    }

    pub fn new(anchors: Vec<Anchor<T>>, face_deploy_volume_ml: T) -> Result<Self, PlantError> {
        if anchors.len() < 2 {
            return Err(PlantError::InvalidCurve("need at least two anchors".into()));
        }
        for a in &anchors {
            if !(a.volume_ml.is_finite() && a.face_diameter_mm.is_finite() && a.free_angle_deg.is_finite()) {
                return Err(PlantError::InvalidCurve("anchor values must be finite".into()));
            }
        }
        if anchors[0].volume_ml != T::zero() {
            return Err(PlantError::InvalidCurve("first anchor must be at 0 mL".into()));
        }
        let last = anchors[anchors.len() - 1].volume_ml;
        if last < T::lit(CURVE_SPAN_ML) {
            return Err(PlantError::InvalidCurve(format!(
                "anchors must span 0..{CURVE_SPAN_ML} mL, last is {last}"
            )));
        }
        for w in anchors.windows(2) {
            if w[1].volume_ml <= w[0].volume_ml {
                return Err(PlantError::InvalidCurve(
                    "anchor volumes must be strictly increasing".into(),
                ));
            }
            if w[1].face_diameter_mm < w[0].face_diameter_mm || w[1].free_angle_deg < w[0].free_angle_deg {
                return Err(PlantError::InvalidCurve(format!(
                    "anchor data must be non-decreasing (at {} mL)",
                    w[1].volume_ml
                )));
            }
        }
        if anchors[0].free_angle_deg < T::zero() {
            return Err(PlantError::InvalidCurve("angles must be non-negative".into()));
        }
        let xs: Vec<T> = anchors.iter().map(|a| a.volume_ml).collect();
        let diameter = MonotoneCubic::new(xs.clone(), anchors.iter().map(|a| a.face_diameter_mm).collect());
        let angle = MonotoneCubic::new(xs, anchors.iter().map(|a| a.free_angle_deg).collect());
        let curve = Self {
            anchors,
            face_deploy_volume_ml,
            diameter,
            angle,
        };
        curve.check_invariants()?;
        Ok(curve)
    }

    /// Dense-sampling check of the decoupling and diameter bounds.
    fn check_invariants(&self) -> Result<(), PlantError> {
        for v in self.sample_volumes(T::lit(INVARIANT_STEP_ML)) {
            let (d2, alpha) = self.eval(v);
            if v <= self.face_deploy_volume_ml && alpha != T::zero() {
                return Err(PlantError::InvalidCurve(format!(
                    "bend angle must be zero during face deployment, got {alpha} at {v} mL"
                )));
            }
            if alpha > T::zero() && d2 < T::lit(MIN_DEPLOYED_FACE_MM) {
                return Err(PlantError::InvalidCurve(format!(
                    "tip bends ({alpha} deg) before face reaches {MIN_DEPLOYED_FACE_MM} mm at {v} mL"
                )));
            }
            if d2 > T::lit(MAX_FACE_MM) {
                return Err(PlantError::InvalidCurve(format!(
                    "face diameter {d2} mm exceeds {MAX_FACE_MM} mm at {v} mL"
                )));
            }
        }
        Ok(())
    }

    /// Volumes `0, step, 2*step, ...` up to and including the last anchor.
    pub fn sample_volumes(&self, step: T) -> Vec<T> {
        let max = self.max_volume();
        let n = (max / step).round().to_usize().unwrap_or(0);
        (0..=n)
            .map(|k| (max * T::from_usize(k).unwrap() / T::from_usize(n.max(1)).unwrap()).min(max))
            .collect()
    }

    fn eval(&self, v: T) -> (T, T) {
        (self.diameter.eval(v), self.angle.eval(v).max(T::zero()))
    }

    /// `(face diameter mm, free angle deg)` at infused volume `v` mL.
    pub fn response(&self, v: T) -> Result<(T, T), PlantError> {
        if !(v >= T::zero() && v <= self.max_volume()) {
            return Err(PlantError::VolumeOutOfRange {
                volume_ml: v.to_f64_lossy(),
                max_ml: self.max_volume().to_f64_lossy(),
            });
        }
        Ok(self.eval(v))
    }

    pub fn max_volume(&self) -> T {
        self.anchors[self.anchors.len() - 1].volume_ml
    }

    pub fn face_deploy_volume(&self) -> T {
        self.face_deploy_volume_ml
    }

    pub fn anchors(&self) -> &[Anchor<T>] {
        &self.anchors
    }
}

impl<T: Real> Default for ResponseCurve<T> {
    fn default() -> Self {
        Self::new(Self::default_anchors(), T::lit(0.8)).expect("default anchors satisfy curve invariants")
    }
}

/// Free function form of [`ResponseCurve::response`].
pub fn balloon_response<T: Real>(curve: &ResponseCurve<T>, volume_ml: T) -> Result<(T, T), PlantError> {
    curve.response(volume_ml)
}
