//! Simulation and control stack for a steerable balloon cardioscope.
//!
//! A single input, the infused saline volume, first expands the optical face
//! and then bends the tip. The tip angle is estimated from the camera by the
//! fraction of the frame covered by the working channel and regulated with a
//! multi-threshold bang-bang law on the syringe pump.
//!
//! Numeric modules are generic over [`scalar::Real`]; the aliases below fix
//! the scalar to `f64`, which is what the closed loop and harness use.

// NaN is rejected with negated comparisons (`!(x > 0.0)`) throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod control;
pub mod estimation;
pub mod harness;
pub mod imaging;
pub mod plant;
pub mod scalar;

pub type Plant = plant::Plant<f64>;
pub type PlantState = plant::PlantState<f64>;
pub type ResponseCurve = plant::ResponseCurve<f64>;
pub type BalloonGeometry = plant::BalloonGeometry<f64>;
pub type ToolModel = plant::ToolModel<f64>;
pub type PumpConfig = plant::PumpConfig<f64>;
pub type PumpState = plant::PumpState<f64>;
pub type Calibration = estimation::Calibration<f64>;
