//! TOML configuration for the plant, camera scene, sensing pipeline, loop and
//! experiments. Every section and field is optional; missing values take the
//! built-in defaults. Units are part of the field names.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::control::{ControlError, LoopConfig};
use crate::estimation::DEFAULT_DEGREE;
use crate::imaging::{ImagingError, SceneModel, SensorConfig};
use crate::plant::{Anchor, PlantError};
use crate::{BalloonGeometry, Plant, PumpConfig, ResponseCurve, ToolModel};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    /// Parse failures carry the line and column reported by the TOML parser.
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error(transparent)]
    Plant(#[from] PlantError),
    #[error(transparent)]
    Imaging(#[from] ImagingError),
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error("invalid experiment settings: {0}")]
    Experiment(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlantSection {
    pub geometry: BalloonGeometry,
    pub anchors: Vec<Anchor<f64>>,
    pub face_deploy_volume_ml: f64,
    pub tool: ToolModel,
    pub pump: PumpConfig,
    /// First-order lag of the bend angle; absent means quasi-static.
    pub lag_tau_s: Option<f64>,
}

impl Default for PlantSection {
    fn default() -> Self {
        Self {
            geometry: BalloonGeometry::default(),
            anchors: ResponseCurve::default_anchors(),
            face_deploy_volume_ml: 0.8,
            tool: ToolModel::default(),
            pump: PumpConfig::default(),
            lag_tau_s: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationSection {
    pub degree: usize,
    pub sweep_max_deg: f64,
    pub sweep_step_deg: f64,
    pub repeats: usize,
}

impl Default for CalibrationSection {
    fn default() -> Self {
        Self {
            degree: DEFAULT_DEGREE,
            sweep_max_deg: 100.0,
            sweep_step_deg: 5.0,
            repeats: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    /// Volume sweep increment, mL.
    pub sweep_step_ml: f64,
    /// Infused volume at the start of each step trial, mL.
    pub step_initial_volume_ml: f64,
    pub step_target_deg: f64,
    pub step_repeats: usize,
    pub step_duration_s: f64,
    /// Intensity noise and edge jitter used for the repeated step trials.
    pub step_noise_amplitude: f64,
    pub step_radius_jitter_px: f64,
    pub toolcomp_angle_deg: f64,
    pub toolcomp_insert_s: f64,
    pub toolcomp_remove_s: f64,
    pub toolcomp_duration_s: f64,
    /// Settling allowance after each tool event, s.
    pub toolcomp_settle_s: f64,
    /// Infused volume at the start of a replay, mL.
    pub replay_initial_volume_ml: f64,
    /// Time added after the last knob sample during replay, s.
    pub replay_tail_s: f64,
    /// Settling allowance for each replayed command change, s.
    pub replay_settle_s: f64,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            sweep_step_ml: 0.2,
            step_initial_volume_ml: 0.0,
            step_target_deg: 60.0,
            step_repeats: 5,
            step_duration_s: 10.0,
            step_noise_amplitude: 3.0,
            step_radius_jitter_px: 0.3,
            toolcomp_angle_deg: 60.0,
            toolcomp_insert_s: 10.0,
            toolcomp_remove_s: 20.0,
            toolcomp_duration_s: 30.0,
            toolcomp_settle_s: 5.0,
            replay_initial_volume_ml: 0.8,
            replay_tail_s: 8.0,
            replay_settle_s: 6.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub plant: PlantSection,
    pub scene: SceneModel,
    pub sensor: SensorConfig,
    pub control: LoopConfig,
    pub calibration: CalibrationSection,
    pub experiments: ExperimentSection,
}

impl SimConfig {
    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: origin.to_path_buf(),
            message: e.to_string().trim_end().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::from_toml_str(&text, path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serialises to TOML")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.build_plant()?;
        self.scene.validate()?;
        self.sensor.validate()?;
        self.control.validate()?;
        let e = &self.experiments;
        if !(e.sweep_step_ml > 0.0 && e.sweep_step_ml.is_finite()) {
            return Err(ConfigError::Experiment("sweep_step_ml must be positive".into()));
        }
        if e.step_repeats == 0 || !(e.step_duration_s > 0.0) {
            return Err(ConfigError::Experiment(
                "step trials need a positive count and duration".into(),
            ));
        }
        if !(0.0 < e.toolcomp_insert_s
            && e.toolcomp_insert_s < e.toolcomp_remove_s
            && e.toolcomp_remove_s < e.toolcomp_duration_s)
        {
            return Err(ConfigError::Experiment(
                "tool events must satisfy 0 < insert < remove < duration".into(),
            ));
        }
        let capacity = self.plant.pump.capacity_ml;
        for v in [e.step_initial_volume_ml, e.replay_initial_volume_ml] {
            if !(0.0..=capacity).contains(&v) {
                return Err(ConfigError::Experiment(format!(
                    "initial volume {v} mL outside [0, {capacity}] mL"
                )));
            }
        }
        let c = &self.calibration;
        if c.repeats == 0 || !(c.sweep_step_deg > 0.0 && c.sweep_max_deg > 0.0) {
            return Err(ConfigError::Experiment(
                "calibration sweep needs positive step, range and repeats".into(),
            ));
        }
        Ok(())
    }

    pub fn build_plant(&self) -> Result<Plant, ConfigError> {
        let p = &self.plant;
        let curve = ResponseCurve::new(p.anchors.clone(), p.face_deploy_volume_ml)?;
        Ok(Plant::new(p.geometry, curve, p.pump, p.tool, p.lag_tau_s)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = SimConfig::from_toml_str("", Path::new("empty.toml")).unwrap();
        assert_eq!(cfg, SimConfig::default());
    }

    #[test]
    fn default_round_trips_through_toml() {
        let text = SimConfig::default().to_toml();
        let back = SimConfig::from_toml_str(&text, Path::new("rt.toml")).unwrap();
        assert_eq!(back, SimConfig::default());
    }

    #[test]
    fn parse_errors_carry_location() {
        let err = SimConfig::from_toml_str("[plant]\nlag_tau_s = \"slow\"\n", Path::new("bad.toml")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("bad.toml"), "{msg}");
        assert!(msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(SimConfig::from_toml_str("[plant]\nvolume = 3\n", Path::new("x.toml")).is_err());
    }

    #[test]
    fn invalid_values_are_rejected() {
        let err = SimConfig::from_toml_str("[experiments]\nsweep_step_ml = 0.0\n", Path::new("x.toml")).unwrap_err();
        assert!(matches!(err, ConfigError::Experiment(_)));
        let err = SimConfig::from_toml_str(
            "[plant.tool]\nmax_offset_deg = -1.0\nreference_angle_deg = 100.0\n",
            Path::new("x.toml"),
        )
        .unwrap_err();
        assert!(matches!(err, ConfigError::Plant(_)));
    }

    #[test]
    fn anchors_override() {
        let text = r#"
            [[plant.anchors]]
            volume_ml = 0.0
            face_diameter_mm = 4.6
            free_angle_deg = 0.0
            [[plant.anchors]]
            volume_ml = 0.8
            face_diameter_mm = 8.0
            free_angle_deg = 0.0
            [[plant.anchors]]
            volume_ml = 4.0
            face_diameter_mm = 9.0
            free_angle_deg = 90.0
        "#;
        let cfg = SimConfig::from_toml_str(text, Path::new("a.toml")).unwrap();
        let plant = cfg.build_plant().unwrap();
        assert_eq!(plant.curve.response(4.0).unwrap(), (9.0, 90.0));
    }
}
