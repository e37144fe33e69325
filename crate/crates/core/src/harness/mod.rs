//! Headless experiment runner: volume sweeps, calibration, step response,
//! tool compensation and operator replay.
//!
//! Each experiment takes a [`Scenario`], returns its data and a
//! [`MetricsReport`], and writes CSV/JSON/TOML files when the scenario has an
//! output directory.

mod calibrate;
mod closed_loop;
pub mod metrics;
mod sweep;

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::config::{ConfigError, SimConfig};
use crate::control::ControlError;
use crate::estimation::EstimationError;
use crate::imaging::ImagingError;
use crate::plant::PlantError;
use crate::Calibration;

pub use calibrate::{angle_sweep, run_calibration, state_for_angle, CalibrationPoint, CalibrationRun};
pub use closed_loop::{
    replay_operator, run_step, run_tool_compensation, ReplayRun, StepRun, StepTrial, ToolCompRun, ToolEvent,
};
pub use metrics::{
    command_steps, max_error_between, step_metrics, MetricsReport, Requirement, RequirementVerdict, StepMetrics,
    Verdict,
};
pub use sweep::{run_sweep, SweepPoint, SweepRun};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Plant(#[from] PlantError),
    #[error(transparent)]
    Imaging(#[from] ImagingError),
    #[error(transparent)]
    Estimation(#[from] EstimationError),
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("calibration is not monotone over its bracket; see the sample table")]
    NonMonotoneCalibration(Box<CalibrationRun>),
}

/// Where the controller's calibration comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum CalibrationSource {
    /// Run a calibration sweep with the scenario's config.
    Auto,
    File(PathBuf),
    Given(Calibration),
}

/// One experiment invocation.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub config: SimConfig,
    pub calibration: CalibrationSource,
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
}

impl Scenario {
    pub fn new(name: &str, config: SimConfig) -> Self {
        Self {
            name: name.to_string(),
            config,
            calibration: CalibrationSource::Auto,
            seed: 0,
            out_dir: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_calibration(mut self, source: CalibrationSource) -> Self {
        self.calibration = source;
        self
    }

    pub fn with_out_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.out_dir = Some(dir.into());
        self
    }

    pub fn resolve_calibration(&self) -> Result<Calibration, HarnessError> {
        match &self.calibration {
            CalibrationSource::Auto => {
                let quiet = Scenario {
                    out_dir: None,
                    ..self.clone()
                };
                Ok(run_calibration(&quiet, false)?.calibration)
            }
            CalibrationSource::File(path) => Ok(Calibration::load(path)?),
            CalibrationSource::Given(cal) => Ok(cal.clone()),
        }
    }

    /// Writes `contents` to `name` in the output directory, if there is one.
    pub(crate) fn emit(&self, name: &str, contents: &str) -> Result<Option<PathBuf>, HarnessError> {
        match &self.out_dir {
            Some(dir) => write_file(&dir.join(name), contents).map(Some),
            None => Ok(None),
        }
    }
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<PathBuf, HarnessError> {
    let io = |e: std::io::Error| HarnessError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(io)?;
    }
    std::fs::write(path, contents).map_err(io)?;
    Ok(path.to_path_buf())
}
