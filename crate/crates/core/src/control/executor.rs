//! Fixed-step closed-loop executor.
//!
//! The plant is integrated at `plant_dt_s`; once per camera period a frame is
//! rendered, sensed and turned into a pump speed that is held until the next
//! frame. The same executor backs scripted runs and the live service.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::law::BangBangLaw;
use super::script::{clamp_command, CommandScript, ControlCommand, TimedCommand};
use super::trace::{Trace, TraceRecord};
use super::ControlError;
use crate::imaging::{render_at_angle, sense, Frame, SceneModel, SensorConfig};
use crate::Calibration;
use crate::{Plant, PlantState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LoopConfig {
    pub camera_rate_hz: f64,
    pub plant_dt_s: f64,
    pub law: BangBangLaw<f64>,
    /// Pump speed used to deploy the optical face.
    pub inflate_rpm: f64,
    /// Start in closed-loop control instead of waiting for an inflate command.
    pub engage_on_start: bool,
    /// Stop the run when the pump is driven into a syringe limit.
    pub abort_on_saturation: bool,
    /// Age of the plant state a frame shows, ms.
    pub frame_latency_ms: u32,
}

impl Default for LoopConfig {
    fn default() -> Self {
        Self {
            camera_rate_hz: 30.0,
            plant_dt_s: 0.001,
            law: BangBangLaw::default(),
            inflate_rpm: 100.0,
            engage_on_start: true,
            abort_on_saturation: true,
            frame_latency_ms: 0,
        }
    }
}

impl LoopConfig {
    pub fn validate(&self) -> Result<(), ControlError> {
        self.law.validate()?;
        if !(self.camera_rate_hz > 0.0 && self.camera_rate_hz.is_finite()) {
            return Err(ControlError::InvalidConfig("camera_rate_hz must be positive".into()));
        }
        if !(self.plant_dt_s > 0.0 && self.plant_dt_s * self.camera_rate_hz <= 1.0) {
            return Err(ControlError::InvalidConfig(
                "plant_dt_s must be positive and no longer than a camera period".into(),
            ));
        }
        if !(self.inflate_rpm > 0.0) {
            return Err(ControlError::InvalidConfig("inflate_rpm must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoopMode {
    /// Waiting for the optical face to be deployed; pump held.
    Idle,
    /// Infusing up to the face-deployment volume.
    Inflating,
    Controlling,
}

/// Outcome of applying one command.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommandOutcome {
    /// Set-angle value was outside the working range and was clamped.
    pub clamped: bool,
    pub alpha_cmd_deg: f64,
}

/// One control decision and its record, computed from a captured frame.
///
/// `delta_p = f(alpha_cmd) - P`; a positive error infuses. Lost channel
/// tracking yields zero speed and a fault flag.
pub fn control_tick(
    state: &PlantState,
    cal: &Calibration,
    law: &BangBangLaw<f64>,
    sensor: &SensorConfig,
    alpha_cmd_deg: f64,
    frame: &Frame,
    time_s: f64,
) -> (f64, TraceRecord) {
    let p_target = cal.eval(alpha_cmd_deg);
    let (p_measured, delta_p, alpha_est_deg, fault) = match sense(frame, sensor) {
        Ok(stats) => {
            let est = cal.estimate_angle(stats.ratio);
            (stats.ratio, p_target - stats.ratio, est.angle_deg, false)
        }
        Err(_) => (f64::NAN, f64::NAN, f64::NAN, true),
    };
    let rpm = if fault { 0.0 } else { law.rpm(delta_p) };
    let record = TraceRecord {
        time_s,
        alpha_cmd_deg,
        p_target,
        p_measured,
        delta_p,
        omega_rpm: rpm,
        volume_ml: state.volume_ml,
        alpha_true_deg: state.angle_deg,
        alpha_est_deg,
        d2_mm: state.face_diameter_mm,
        tool: state.tool.inserted,
        fault,
    };
    (rpm, record)
}

/// Stateful closed loop over one balloon.
#[derive(Debug, Clone)]
pub struct Executor {
    plant: Plant,
    scene: SceneModel,
    sensor: SensorConfig,
    cal: Calibration,
    cfg: LoopConfig,
    seed: u64,
    state: PlantState,
    mode: LoopMode,
    alpha_cmd_deg: f64,
    estop: bool,
    tick_index: u64,
    step_index: u64,
    angle_history: VecDeque<f64>,
    last_frame: Option<Frame>,
}

impl Executor {
    pub fn new(
        plant: Plant,
        scene: SceneModel,
        sensor: SensorConfig,
        cal: Calibration,
        cfg: LoopConfig,
        seed: u64,
    ) -> Result<Self, ControlError> {
        cfg.validate()?;
        if !cal.monotone {
            return Err(ControlError::UnusableCalibration);
        }
        let state = plant.initial_state();
        let mode = if cfg.engage_on_start {
            LoopMode::Controlling
        } else {
            LoopMode::Idle
        };
        Ok(Self {
            plant,
            scene,
            sensor,
            cal,
            cfg,
            seed,
            state,
            mode,
            alpha_cmd_deg: 0.0,
            estop: false,
            tick_index: 0,
            step_index: 0,
            angle_history: VecDeque::from([state.angle_deg]),
            last_frame: None,
        })
    }

    /// Replaces the plant state before the first tick.
    pub fn with_state(mut self, state: PlantState) -> Self {
        self.state = PlantState { time_s: 0.0, ..state };
        self.angle_history = VecDeque::from([state.angle_deg]);
        self
    }

    pub fn state(&self) -> &PlantState {
        &self.state
    }

    pub fn mode(&self) -> LoopMode {
        self.mode
    }

    pub fn alpha_cmd_deg(&self) -> f64 {
        self.alpha_cmd_deg
    }

    pub fn estopped(&self) -> bool {
        self.estop
    }

    pub fn last_frame(&self) -> Option<&Frame> {
        self.last_frame.as_ref()
    }

    pub fn calibration(&self) -> &Calibration {
        &self.cal
    }

    pub fn config(&self) -> &LoopConfig {
        &self.cfg
    }

    pub fn camera_period_s(&self) -> f64 {
        1.0 / self.cfg.camera_rate_hz
    }

    fn step_boundary(&self, tick: u64) -> u64 {
        (tick as f64 / self.cfg.camera_rate_hz / self.cfg.plant_dt_s).round() as u64
    }

    /// Time of the next tick.
    pub fn time_s(&self) -> f64 {
        self.step_boundary(self.tick_index) as f64 * self.cfg.plant_dt_s
    }

    pub fn apply(&mut self, command: &ControlCommand) -> CommandOutcome {
        let mut clamped = false;
        match *command {
            ControlCommand::SetAngle { angle_deg } => {
                let (a, c) = clamp_command(angle_deg);
                self.alpha_cmd_deg = a;
                clamped = c;
            }
            ControlCommand::Inflate => {
                let deploy = self
                    .plant
                    .pump
                    .microsteps_for_volume(self.plant.curve.face_deploy_volume());
                if self.state.pump.microstep_count < deploy {
                    self.mode = LoopMode::Inflating;
                } else {
                    self.mode = LoopMode::Controlling;
                }
            }
            ControlCommand::InsertTool | ControlCommand::RemoveTool => {
                let inserted = matches!(command, ControlCommand::InsertTool);
                self.state = self.plant.set_tool(&self.state, inserted);
                // The shape changes at once; the next frame must show it.
                if let Some(last) = self.angle_history.back_mut() {
                    *last = self.state.angle_deg;
                }
            }
            ControlCommand::EStop => self.estop = true,
            ControlCommand::Reset => self.estop = false,
        }
        CommandOutcome {
            clamped,
            alpha_cmd_deg: self.alpha_cmd_deg,
        }
    }

    /// Applies queued commands in timestamp order (stable for ties).
    pub fn drain(&mut self, mut inbox: Vec<TimedCommand>) -> Vec<CommandOutcome> {
        inbox.sort_by(|a, b| a.time_s.total_cmp(&b.time_s));
        inbox.iter().map(|c| self.apply(&c.command)).collect()
    }

    fn frame_angle(&self) -> f64 {
        let lag = self.cfg.frame_latency_ms as usize;
        let n = self.angle_history.len();
        self.angle_history[n.saturating_sub(1 + lag)]
    }

    fn frame_seed(&self) -> u64 {
        self.seed ^ self.tick_index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
    }

    /// Captures a frame, decides the pump speed and integrates the plant to
    /// the next camera tick.
    pub fn tick(&mut self) -> Result<TraceRecord, ControlError> {
        let time_s = self.time_s();
        let frame = render_at_angle(self.frame_angle(), &self.scene, self.frame_seed());
        let (law_rpm, mut record) = control_tick(
            &self.state,
            &self.cal,
            &self.cfg.law,
            &self.sensor,
            self.alpha_cmd_deg,
            &frame,
            time_s,
        );
        let rpm = if self.estop {
            0.0
        } else {
            match self.mode {
                LoopMode::Idle => 0.0,
                LoopMode::Inflating => self.cfg.inflate_rpm,
                LoopMode::Controlling => law_rpm,
            }
        };
        record.omega_rpm = rpm;
        self.last_frame = Some(frame);

        let end = self.step_boundary(self.tick_index + 1);
        let dt = self.cfg.plant_dt_s;
        let deploy = self
            .plant
            .pump
            .microsteps_for_volume(self.plant.curve.face_deploy_volume());
        let mut held = rpm;
        while self.step_index < end {
            let next = if self.mode == LoopMode::Inflating && !self.estop && held != 0.0 {
                let s = self.plant.step_toward(&self.state, held, dt, deploy)?;
                if s.pump.microstep_count == deploy {
                    self.mode = LoopMode::Controlling;
                    held = 0.0;
                }
                s
            } else {
                self.plant.step(&self.state, held, dt)?
            };
            self.step_index += 1;
            self.state = PlantState {
                time_s: self.step_index as f64 * dt,
                ..next
            };
            if let Some(limit) = next.pump.saturated {
                if self.cfg.abort_on_saturation && held != 0.0 {
                    return Err(ControlError::PumpSaturated {
                        time_s: self.state.time_s,
                        limit,
                    });
                }
            }
            self.angle_history.push_back(self.state.angle_deg);
            if self.angle_history.len() > self.cfg.frame_latency_ms as usize + 1 {
                self.angle_history.pop_front();
            }
        }
        self.tick_index += 1;
        Ok(record)
    }
}

/// Runs `script` against `executor` until `duration_s`, one record per tick.
pub fn run_closed_loop(mut executor: Executor, script: &CommandScript, duration_s: f64) -> Result<Trace, ControlError> {
    if !(duration_s >= 0.0 && duration_s.is_finite()) {
        return Err(ControlError::InvalidConfig("duration must be non-negative".into()));
    }
    let mut trace = Trace::default();
    let mut pending = script.commands.iter().peekable();
    // Tick times come from integer step counts; allow for their rounding.
    let eps = executor.cfg.plant_dt_s / 2.0;
    while executor.time_s() <= duration_s + eps {
        let now = executor.time_s();
        let mut inbox = Vec::new();
        while let Some(c) = pending.next_if(|c| c.time_s <= now + eps) {
            inbox.push(*c);
        }
        executor.drain(inbox);
        trace.push(executor.tick()?);
    }
    Ok(trace)
}
