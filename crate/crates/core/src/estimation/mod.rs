//! Angle estimation from the pixel ratio and trace smoothing.

mod calibration;
mod lstsq;
mod savgol;

use thiserror::Error;

pub use calibration::{
    estimate_angle, fit_calibration, AngleEstimate, Calibration, CalibrationSample, BISECTION_TOL_DEG, DEFAULT_DEGREE,
    MIN_DISTINCT_ANGLES, MIN_SAMPLES, MIN_SPAN_DEG, MONOTONE_STEP_DEG,
};
pub use lstsq::solve_least_squares;
pub use savgol::{savgol_smooth, savgol_weights, SavgolFilter, Signal, DEFAULT_ORDER, DEFAULT_WINDOW};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimationError {
    #[error("insufficient calibration samples: {samples} samples, {distinct_angles} distinct angles spanning {span_deg} deg")]
    InsufficientSamples {
        samples: usize,
        distinct_angles: usize,
        span_deg: f64,
    },
    #[error("calibration samples must be finite")]
    NonFinite,
    #[error("least-squares system is rank deficient")]
    Singular,
    #[error("calibration is not strictly increasing over its bracket")]
    NonMonotone,
    #[error("signal of {len} samples is shorter than the {window}-sample window")]
    SignalTooShort { len: usize, window: usize },
    #[error("invalid smoothing window {window} for polynomial order {order}")]
    InvalidWindow { window: usize, order: usize },
    #[error("calibration file: {0}")]
    Parse(String),
    #[error("calibration io: {0}")]
    Io(String),
}
