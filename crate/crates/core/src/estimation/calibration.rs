//! Pixel-ratio calibration `P = f(alpha)` and its inversion.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::lstsq::solve_least_squares;
use super::EstimationError;
use crate::scalar::Real;

pub const DEFAULT_DEGREE: usize = 4;
/// Samples, distinct angles and angular span a fit needs.
pub const MIN_SAMPLES: usize = 5;
pub const MIN_DISTINCT_ANGLES: usize = 5;
pub const MIN_SPAN_DEG: f64 = 30.0;
/// Derivative sampling step for the monotonicity check.
pub const MONOTONE_STEP_DEG: f64 = 0.1;
/// Bisection stops once the bracket is narrower than this.
pub const BISECTION_TOL_DEG: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSample<T> {
    pub angle_deg: T,
    pub ratio: T,
}

/// Polynomial map from bend angle (degrees) to pixel ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration<T> {
    /// `c0, c1, ...` with `P = sum c_k alpha^k`.
    pub coefficients: Vec<T>,
    pub bracket_deg: [T; 2],
    pub rmse: T,
    /// Strictly increasing over the bracket; required before use in control.
    pub monotone: bool,
    pub sample_count: usize,
    #[serde(default)]
    pub created_by: String,
}

/// Result of inverting the calibration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleEstimate<T> {
    pub angle_deg: T,
    /// The ratio fell outside `[f(lo), f(hi)]` and the angle was clamped.
    pub saturated: bool,
}

fn horner<T: Real>(coefficients: &[T], x: T) -> T {
    coefficients.iter().rev().fold(T::zero(), |acc, &c| acc * x + c)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl<T: Real> Calibration<T> {
    pub fn eval(&self, angle_deg: T) -> T {
        horner(&self.coefficients, angle_deg)
    }

    pub fn derivative(&self, angle_deg: T) -> T {
        let d: Vec<T> = self
            .coefficients
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &c)| c * T::from_usize(k).unwrap())
            .collect();
        horner(&d, angle_deg)
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len().saturating_sub(1)
    }

    /// Positive derivative at every `MONOTONE_STEP_DEG` across the bracket.
    pub fn check_monotone(&self) -> bool {
        let [lo, hi] = self.bracket_deg;
        let step = T::lit(MONOTONE_STEP_DEG);
        let n = ((hi - lo) / step).ceil().to_usize().unwrap_or(0);
        (0..=n).all(|k| {
            let a = (lo + step * T::from_usize(k).unwrap()).min(hi);
            self.derivative(a) > T::zero()
        })
    }

    pub fn ratio_range(&self) -> [T; 2] {
        [self.eval(self.bracket_deg[0]), self.eval(self.bracket_deg[1])]
    }

    /// Bisection root of `f(alpha) = ratio` within the bracket.
    pub fn estimate_angle(&self, ratio: T) -> AngleEstimate<T> {
        let [mut lo, mut hi] = self.bracket_deg;
        let [p_lo, p_hi] = self.ratio_range();
        if !(ratio > p_lo) {
            return AngleEstimate {
                angle_deg: lo,
                saturated: ratio < p_lo || ratio.is_nan(),
            };
        }
        if !(ratio < p_hi) {
            return AngleEstimate {
                angle_deg: hi,
                saturated: ratio > p_hi,
            };
        }
        let tol = T::lit(BISECTION_TOL_DEG);
        let two = T::lit(2.0);
        while hi - lo > tol {
            let mid = (lo + hi) / two;
            if self.eval(mid) < ratio {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        AngleEstimate {
            angle_deg: (lo + hi) / two,
            saturated: false,
        }
    }
}

impl Calibration<f64> {
    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("calibration serialises to TOML")
    }

    pub fn from_toml(text: &str) -> Result<Self, EstimationError> {
        let cal: Self = toml::from_str(text).map_err(|e| EstimationError::Parse(e.to_string()))?;
        if cal.coefficients.is_empty() || !(cal.bracket_deg[0] < cal.bracket_deg[1]) {
            return Err(EstimationError::Parse(
                "calibration needs coefficients and an ordered bracket".into(),
            ));
        }
        Ok(cal)
    }

    pub fn save(&self, path: &Path) -> Result<(), EstimationError> {
        std::fs::write(path, self.to_toml()).map_err(|e| EstimationError::Io(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self, EstimationError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| EstimationError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            EstimationError::Parse(m) => EstimationError::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}

/// Least-squares polynomial fit of `ratio` against `angle_deg`.
///
/// The system is solved in the centred and scaled variable
/// `u = (alpha - m) / s` for conditioning and then expanded back to
/// monomial coefficients in degrees.
pub fn fit_calibration<T: Real>(
    samples: &[CalibrationSample<T>],
    degree: usize,
) -> Result<Calibration<T>, EstimationError> {
    let needed = MIN_SAMPLES.max(degree + 1);
    let mut angles: Vec<T> = samples.iter().map(|s| s.angle_deg).collect();
    angles.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    angles.dedup();
    let distinct = angles.len();
    let span = match (angles.first(), angles.last()) {
        (Some(&lo), Some(&hi)) => hi - lo,
        _ => T::zero(),
    };
    if samples.len() < needed || distinct < MIN_DISTINCT_ANGLES.max(degree + 1) || span < T::lit(MIN_SPAN_DEG) {
        return Err(EstimationError::InsufficientSamples {
            samples: samples.len(),
            distinct_angles: distinct,
            span_deg: span.to_f64_lossy(),
        });
    }
    if samples
        .iter()
        .any(|s| !(s.angle_deg.is_finite() && s.ratio.is_finite()))
    {
        return Err(EstimationError::NonFinite);
    }
    let lo = angles[0];
    let hi = angles[distinct - 1];
    let two = T::lit(2.0);
    let centre = (lo + hi) / two;
    let scale = (hi - lo) / two;
    let rows: Vec<Vec<T>> = samples
        .iter()
        .map(|s| {
            let u = (s.angle_deg - centre) / scale;
            (0..=degree).map(|k| u.powi(k as i32)).collect()
        })
        .collect();
    let rhs: Vec<T> = samples.iter().map(|s| s.ratio).collect();
    let scaled = solve_least_squares(&rows, &rhs).ok_or(EstimationError::Singular)?;

    // sum_k b_k ((a - m)/s)^k = sum_j a^j sum_{k>=j} b_k C(k,j) (-m)^(k-j) / s^k
    let coefficients: Vec<T> = (0..=degree)
        .map(|j| {
            (j..=degree).fold(T::zero(), |acc, k| {
                acc + scaled[k] * T::lit(binomial(k, j)) * (-centre).powi((k - j) as i32) / scale.powi(k as i32)
            })
        })
        .collect();

    let sse = samples.iter().fold(T::zero(), |acc, s| {
        let r = horner(&coefficients, s.angle_deg) - s.ratio;
        acc + r * r
    });
    let mut cal = Calibration {
        coefficients,
        bracket_deg: [lo, hi],
        rmse: (sse / T::from_usize(samples.len()).unwrap()).sqrt(),
        monotone: false,
        sample_count: samples.len(),
        created_by: String::new(),
    };
    cal.monotone = cal.check_monotone();
    Ok(cal)
}

/// Free function form of [`Calibration::estimate_angle`].
pub fn estimate_angle<T: Real>(cal: &Calibration<T>, ratio: T) -> AngleEstimate<T> {
    cal.estimate_angle(ratio)
}
