//! Quasi-static balloon plant: syringe pump, volume response, tool
//! disturbance and tip kinematics.

mod curve;
mod geometry;
mod kinematics;
mod pump;
mod tool;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use curve::{
    balloon_response, Anchor, ResponseCurve, CURVE_SPAN_ML, INVARIANT_STEP_ML, MAX_FACE_MM, MIN_DEPLOYED_FACE_MM,
};
pub use geometry::{BalloonGeometry, MAX_COLLAPSED_OD_MM};
pub use kinematics::tip_pose;
pub use pump::{step_pump, step_pump_toward, PumpConfig, PumpLimit, PumpState};
pub use tool::{apply_tool, ToolModel};

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlantError {
    #[error("motor speed {rpm} rpm outside +/-{max_rpm} rpm")]
    SpeedOutOfRange { rpm: f64, max_rpm: f64 },
    #[error("time step must be positive, got {dt} s")]
    NonPositiveStep { dt: f64 },
    #[error("volume {volume_ml} mL outside response curve span [0, {max_ml}] mL")]
    VolumeOutOfRange { volume_ml: f64, max_ml: f64 },
    #[error("invalid balloon geometry: {0}")]
    InvalidGeometry(String),
    #[error("invalid response curve: {0}")]
    InvalidCurve(String),
    #[error("invalid tool model: {0}")]
    InvalidTool(String),
    #[error("invalid pump configuration: {0}")]
    InvalidPump(String),
}

/// Snapshot of the balloon at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct PlantState<T> {
    pub pump: PumpState<T>,
    pub volume_ml: T,
    pub face_diameter_mm: T,
    /// Bend the balloon would take with no tool in the channel.
    pub free_angle_deg: T,
    /// Actual bend, after the tool disturbance.
    pub angle_deg: T,
    pub roll_deg: T,
    pub tool: ToolModel<T>,
    pub time_s: T,
}

impl<T: Real> PlantState<T> {
    pub fn tool_inserted(&self) -> bool {
        self.tool.inserted
    }
}

/// Static description of the balloon and its actuation.
#[derive(Debug, Clone, PartialEq)]
pub struct Plant<T> {
    pub geometry: BalloonGeometry<T>,
    pub curve: ResponseCurve<T>,
    pub pump: PumpConfig<T>,
    pub tool: ToolModel<T>,
    /// Optional first-order lag of the free angle behind its static value.
    pub lag_tau_s: Option<T>,
}

impl<T: Real> Default for Plant<T> {
    fn default() -> Self {
        Self {
            geometry: BalloonGeometry::default(),
            curve: ResponseCurve::default(),
            pump: PumpConfig::default(),
            tool: ToolModel::default(),
            lag_tau_s: None,
        }
    }
}

impl<T: Real> Plant<T> {
    pub fn new(
        geometry: BalloonGeometry<T>,
        curve: ResponseCurve<T>,
        pump: PumpConfig<T>,
        tool: ToolModel<T>,
        lag_tau_s: Option<T>,
    ) -> Result<Self, PlantError> {
        geometry.validate()?;
        pump.validate()?;
        tool.validate()?;
        if pump.capacity_ml > curve.max_volume() {
            return Err(PlantError::InvalidPump(format!(
                "syringe capacity {} mL exceeds response curve span {} mL",
                pump.capacity_ml,
                curve.max_volume()
            )));
        }
        if let Some(tau) = lag_tau_s {
            if !(tau > T::zero()) {
                return Err(PlantError::InvalidCurve("lag time constant must be positive".into()));
            }
        }
        Ok(Self {
            geometry,
            curve,
            pump,
            tool,
            lag_tau_s,
        })
    }

    /// Resting state with `pump` already displaced; the angle is at its static value.
    pub fn state_from_pump(
        &self,
        pump: PumpState<T>,
        tool_inserted: bool,
        time_s: T,
    ) -> Result<PlantState<T>, PlantError> {
        let volume_ml = pump.infused_volume(&self.pump);
        let (face_diameter_mm, free_angle_deg) = self.curve.response(volume_ml)?;
        let tool = self.tool.with_inserted(tool_inserted);
        Ok(PlantState {
            pump,
            volume_ml,
            face_diameter_mm,
            free_angle_deg,
            angle_deg: apply_tool(free_angle_deg, &tool),
            roll_deg: T::zero(),
            tool,
            time_s,
        })
    }

    /// Fully deflated balloon at t = 0.
    pub fn initial_state(&self) -> PlantState<T> {
        self.state_from_pump(PumpState::default(), false, T::zero())
            .expect("zero volume lies on every valid curve")
    }

    pub fn state_at_volume(&self, volume_ml: T, tool_inserted: bool) -> Result<PlantState<T>, PlantError> {
        let count = self.pump.microsteps_for_volume(volume_ml);
        self.state_from_pump(PumpState::at_microsteps(count), tool_inserted, T::zero())
    }

    /// Advances the plant by `dt` seconds with the pump at `rpm`.
    pub fn step(&self, state: &PlantState<T>, rpm: T, dt: T) -> Result<PlantState<T>, PlantError> {
        let pump = step_pump(&self.pump, &state.pump, rpm, dt)?;
        self.settle(state, pump, dt)
    }

    /// Like [`Plant::step`] but the pump stops on `target_count` microsteps.
    pub fn step_toward(
        &self,
        state: &PlantState<T>,
        rpm: T,
        dt: T,
        target_count: i64,
    ) -> Result<PlantState<T>, PlantError> {
        let pump = step_pump_toward(&self.pump, &state.pump, rpm, dt, target_count)?;
        self.settle(state, pump, dt)
    }

    fn settle(&self, state: &PlantState<T>, pump: PumpState<T>, dt: T) -> Result<PlantState<T>, PlantError> {
        let volume_ml = pump.infused_volume(&self.pump);
        let (face_diameter_mm, static_angle) = self.curve.response(volume_ml)?;
        let free_angle_deg = match self.lag_tau_s {
            Some(tau) => {
                let blend = T::one() - (-dt / tau).exp();
                state.free_angle_deg + (static_angle - state.free_angle_deg) * blend
            }
            None => static_angle,
        };
        Ok(PlantState {
            pump,
            volume_ml,
            face_diameter_mm,
            free_angle_deg,
            angle_deg: apply_tool(free_angle_deg, &state.tool),
            roll_deg: state.roll_deg,
            tool: state.tool,
            time_s: state.time_s + dt,
        })
    }

    /// Inserts or withdraws the tool; the bend responds immediately.
    pub fn set_tool(&self, state: &PlantState<T>, inserted: bool) -> PlantState<T> {
        let tool = state.tool.with_inserted(inserted);
        PlantState {
            tool,
            angle_deg: apply_tool(state.free_angle_deg, &tool),
            ..*state
        }
    }

    pub fn tip_position(&self, state: &PlantState<T>) -> [T; 3] {
        tip_pose(state.angle_deg, state.roll_deg, &self.geometry)
    }
}

/// Free function form of [`Plant::step`].
pub fn plant_step<T: Real>(
    plant: &Plant<T>,
    state: &PlantState<T>,
    rpm: T,
    dt: T,
) -> Result<PlantState<T>, PlantError> {
    plant.step(state, rpm, dt)
}
