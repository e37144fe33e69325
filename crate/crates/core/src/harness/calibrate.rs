//! Calibration sweep: hold the balloon at a ladder of angles, sense each
//! frame, average the repeats and fit the ratio polynomial.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{HarnessError, MetricsReport, Scenario};
use crate::config::ConfigError;
use crate::estimation::{fit_calibration, CalibrationSample};
use crate::imaging::{render_frame, sense};
use crate::{Calibration, Plant, PlantState, PumpState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationPoint {
    pub target_deg: f64,
    /// Angle the balloon actually reached at whole-microstep resolution.
    pub angle_deg: f64,
    pub volume_ml: f64,
    pub ratios: Vec<f64>,
    pub mean_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationRun {
    pub tool_inserted: bool,
    pub points: Vec<CalibrationPoint>,
    pub calibration: Calibration,
    pub report: MetricsReport,
}

impl CalibrationRun {
    pub fn samples_csv(&self) -> String {
        let mut out = String::from("target_deg,angle_deg,volume_ml,mean_ratio,fitted_ratio,residual\n");
        for p in &self.points {
            let fit = self.calibration.eval(p.angle_deg);
            let _ = writeln!(
                out,
                "{:.3},{:.6},{:.7},{:.8},{:.8},{:.3e}",
                p.target_deg,
                p.angle_deg,
                p.volume_ml,
                p.mean_ratio,
                fit,
                p.mean_ratio - fit
            );
        }
        out
    }

    /// Fitted curve and its slope at 1 degree spacing over the bracket.
    pub fn curve_csv(&self) -> String {
        let [lo, hi] = self.calibration.bracket_deg;
        let mut out = String::from("angle_deg,ratio,slope_per_deg\n");
        let n = (hi - lo).floor() as usize;
        for k in 0..=n {
            let a = lo + k as f64;
            let _ = writeln!(
                out,
                "{a:.3},{:.8},{:.8e}",
                self.calibration.eval(a),
                self.calibration.derivative(a)
            );
        }
        out
    }
}

/// Command ladder `0, step, 2*step, ...` up to `max_deg`.
pub fn angle_sweep(max_deg: f64, step_deg: f64) -> Vec<f64> {
    let n = (max_deg / step_deg + 1e-9).floor() as usize;
    (0..=n).map(|k| k as f64 * step_deg).collect()
}

/// Resting state whose bend is closest to `target_deg`, searched over whole
/// microsteps from face deployment to the full syringe. `None` when the
/// target lies beyond the reachable range.
pub fn state_for_angle(
    plant: &Plant,
    target_deg: f64,
    tool_inserted: bool,
) -> Result<Option<PlantState>, HarnessError> {
    let at = |n: i64| plant.state_from_pump(PumpState::at_microsteps(n), tool_inserted, 0.0);
    let mut lo = plant.pump.microsteps_for_volume(plant.curve.face_deploy_volume());
    let mut hi = plant.pump.capacity_microsteps();
    let lo_state = at(lo)?;
    if target_deg <= lo_state.angle_deg {
        return Ok(Some(lo_state));
    }
    if at(hi)?.angle_deg < target_deg {
        return Ok(None);
    }
    // Invariant: angle(lo) < target <= angle(hi).
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if at(mid)?.angle_deg < target_deg {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (below, above) = (at(lo)?, at(hi)?);
    Ok(Some(if target_deg - below.angle_deg < above.angle_deg - target_deg {
        below
    } else {
        above
    }))
}

fn frame_seed(seed: u64, k: u64) -> u64 {
    seed ^ k.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Runs the calibration sweep. Angles the balloon cannot reach (for example
/// the top of the range with the tool inserted) are skipped.
pub fn run_calibration(scenario: &Scenario, tool_inserted: bool) -> Result<CalibrationRun, HarnessError> {
    let cfg = &scenario.config;
    let c = &cfg.calibration;
    if !(c.sweep_step_deg > 0.0 && c.sweep_max_deg > 0.0) || c.repeats == 0 {
        return Err(ConfigError::Experiment("calibration sweep needs positive step, range and repeats".into()).into());
    }
    let plant = cfg.build_plant()?;
    let mut points = Vec::new();
    let mut k = 0u64;
    for target in angle_sweep(c.sweep_max_deg, c.sweep_step_deg) {
        let Some(state) = state_for_angle(&plant, target, tool_inserted)? else {
            continue;
        };
        let ratios = (0..c.repeats)
            .map(|_| {
                k += 1;
                let frame = render_frame(&state, &cfg.scene, frame_seed(scenario.seed, k));
                sense(&frame, &cfg.sensor).map(|s| s.ratio)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mean_ratio = ratios.iter().sum::<f64>() / ratios.len() as f64;
        points.push(CalibrationPoint {
            target_deg: target,
            angle_deg: state.angle_deg,
            volume_ml: state.volume_ml,
            ratios,
            mean_ratio,
        });
    }
    let samples: Vec<CalibrationSample<f64>> = points
        .iter()
        .map(|p| CalibrationSample {
            angle_deg: p.angle_deg,
            ratio: p.mean_ratio,
        })
        .collect();
    let mut calibration = fit_calibration(&samples, c.degree)?;
    calibration.created_by = format!(
        "cardioscope calibrate: scenario={} seed={} tool={} repeats={}",
        scenario.name, scenario.seed, tool_inserted, c.repeats
    );

    let mut report = MetricsReport::new(&scenario.name, "calibrate", scenario.seed);
    report.record("rmse", calibration.rmse);
    report.record("monotone", f64::from(u8::from(calibration.monotone)));
    report.record("samples", points.len() as f64);
    report.record("bracket_lo_deg", calibration.bracket_deg[0]);
    report.record("bracket_hi_deg", calibration.bracket_deg[1]);
    let run = CalibrationRun {
        tool_inserted,
        points,
        calibration,
        report,
    };

    let suffix = if tool_inserted { "_tool" } else { "" };
    scenario.emit(&format!("calibration_samples{suffix}.csv"), &run.samples_csv())?;
    scenario.emit(&format!("calibration_curve{suffix}.csv"), &run.curve_csv())?;
    scenario.emit(&format!("calibration_report{suffix}.json"), &run.report.to_json())?;
    if !run.calibration.monotone {
        return Err(HarnessError::NonMonotoneCalibration(Box::new(run)));
    }
    scenario.emit(&format!("calibration{suffix}.toml"), &run.calibration.to_toml())?;
    Ok(run)
}
