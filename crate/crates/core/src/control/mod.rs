//! Bang-bang pixel-ratio control and the closed-loop executor.

mod executor;
mod law;
mod script;
mod trace;

use thiserror::Error;

pub use executor::{control_tick, run_closed_loop, CommandOutcome, Executor, LoopConfig, LoopMode};
pub use law::{bang_bang_rpm, BangBangLaw};
pub use script::{clamp_command, CommandScript, ControlCommand, TimedCommand, MAX_COMMAND_DEG};
pub use trace::{Trace, TraceRecord, TRACE_COLUMNS};

use crate::plant::{PlantError, PumpLimit};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControlError {
    #[error("invalid loop configuration: {0}")]
    InvalidConfig(String),
    #[error("calibration is not monotone and cannot be used for control")]
    UnusableCalibration,
    #[error(transparent)]
    Plant(#[from] PlantError),
    #[error("pump saturated ({limit:?}) at t = {time_s} s")]
    PumpSaturated { time_s: f64, limit: PumpLimit },
    #[error("command script: {0}")]
    Script(String),
    #[error("trace csv: {0}")]
    TraceParse(String),
}
