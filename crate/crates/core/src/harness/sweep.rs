//! Inflation sweep with and without the tool.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::metrics::{Requirement, MIN_CHANNEL_ID_MM, MIN_MAX_ANGLE_DEG};
use super::{HarnessError, MetricsReport, Scenario};
use crate::config::ConfigError;
use crate::plant::{INVARIANT_STEP_ML, MAX_COLLAPSED_OD_MM, MAX_FACE_MM, MIN_DEPLOYED_FACE_MM};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub volume_ml: f64,
    pub d2_mm: f64,
    pub alpha_free_deg: f64,
    pub alpha_tool_deg: f64,
}

impl SweepPoint {
    pub fn tool_deficit_deg(&self) -> f64 {
        self.alpha_free_deg - self.alpha_tool_deg
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRun {
    /// Reported sweep at the configured increment.
    pub points: Vec<SweepPoint>,
    /// Dense resampling used for the invariant checks.
    pub dense: Vec<SweepPoint>,
    pub report: MetricsReport,
}

impl SweepRun {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("volume_ml,d2_mm,alpha_free_deg,alpha_tool_deg,tool_deficit_deg\n");
        for p in &self.points {
            let _ = writeln!(
                out,
                "{:.7},{:.6},{:.6},{:.6},{:.6}",
                p.volume_ml,
                p.d2_mm,
                p.alpha_free_deg,
                p.alpha_tool_deg,
                p.tool_deficit_deg()
            );
        }
        out
    }
}

fn point(plant: &crate::Plant, volume_ml: f64) -> Result<SweepPoint, HarnessError> {
    let free = plant.state_at_volume(volume_ml, false)?;
    let tool = plant.state_at_volume(volume_ml, true)?;
    Ok(SweepPoint {
        volume_ml: free.volume_ml,
        d2_mm: free.face_diameter_mm,
        alpha_free_deg: free.angle_deg,
        alpha_tool_deg: tool.angle_deg,
    })
}

/// Steps the infused volume from empty to the end of the response curve and
/// checks the geometric requirements and the decoupling invariant.
pub fn run_sweep(scenario: &Scenario) -> Result<SweepRun, HarnessError> {
    let cfg = &scenario.config;
    let step = cfg.experiments.sweep_step_ml;
    if !(step > 0.0 && step.is_finite()) {
        return Err(ConfigError::Experiment("sweep_step_ml must be positive".into()).into());
    }
    let plant = cfg.build_plant()?;
    let points = plant
        .curve
        .sample_volumes(step)
        .into_iter()
        .map(|v| point(&plant, v))
        .collect::<Result<Vec<_>, _>>()?;
    let dense = plant
        .curve
        .sample_volumes(INVARIANT_STEP_ML)
        .into_iter()
        .map(|v| point(&plant, v))
        .collect::<Result<Vec<_>, _>>()?;

    let deploy = plant.curve.face_deploy_volume();
    let decoupled = dense
        .iter()
        .all(|p| p.alpha_free_deg <= 0.0 || p.d2_mm >= MIN_DEPLOYED_FACE_MM);
    let plateau = dense.iter().filter(|p| p.volume_ml >= deploy);
    let (d2_lo, d2_hi) = plateau.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        (lo.min(p.d2_mm), hi.max(p.d2_mm))
    });
    let d2_max = dense.iter().map(|p| p.d2_mm).fold(f64::NEG_INFINITY, f64::max);
    let alpha_max = dense.iter().map(|p| p.alpha_free_deg).fold(0.0, f64::max);
    let alpha_max_tool = dense.iter().map(|p| p.alpha_tool_deg).fold(0.0, f64::max);
    let max_deficit = dense.iter().map(SweepPoint::tool_deficit_deg).fold(0.0, f64::max);
    let last = *points.last().expect("sweep has at least one point");

    let mut report = MetricsReport::new(&scenario.name, "sweep", scenario.seed);
    report.decoupling = Some(decoupled);
    report.record("alpha_at_max_volume_deg", last.alpha_free_deg);
    report.record("alpha_tool_at_max_volume_deg", last.alpha_tool_deg);
    report.record("tool_deficit_at_max_volume_deg", last.tool_deficit_deg());
    report.record("max_tool_deficit_deg", max_deficit);
    report.record("d2_plateau_min_mm", d2_lo);
    report.record("d2_plateau_max_mm", d2_hi);
    report.record("d2_max_mm", d2_max);
    report.record("sweep_points", points.len() as f64);

    let d1 = plant.geometry.collapsed_od_mm;
    report.judge(
        Requirement::CollapsedDiameter,
        d1 <= MAX_COLLAPSED_OD_MM,
        format!("D1 = {d1} mm"),
    );
    report.judge(
        Requirement::FaceDiameter,
        d2_lo >= MIN_DEPLOYED_FACE_MM && d2_hi <= MAX_FACE_MM && d2_max <= MAX_FACE_MM,
        format!("deployed D2 in [{d2_lo:.3}, {d2_hi:.3}] mm"),
    );
    report.judge(
        Requirement::MaxBendAngle,
        alpha_max.min(alpha_max_tool) >= MIN_MAX_ANGLE_DEG,
        format!("alpha_max = {alpha_max:.2} deg ({alpha_max_tool:.2} deg with tool)"),
    );
    let d3 = plant.geometry.channel_id_mm;
    report.judge(
        Requirement::ChannelBore,
        d3 >= MIN_CHANNEL_ID_MM,
        format!("D3 = {d3} mm"),
    );
    report.judge(
        Requirement::Decoupling,
        decoupled,
        format!("checked at {} volumes, {INVARIANT_STEP_ML} mL apart", dense.len()),
    );

    let run = SweepRun { points, dense, report };
    scenario.emit("sweep.csv", &run.to_csv())?;
    scenario.emit("sweep_report.json", &run.report.to_json())?;
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SimConfig;

    #[test]
    fn default_sweep_passes() {
        let run = run_sweep(&Scenario::new("t", SimConfig::default())).unwrap();
        assert_eq!(run.points.len(), 21);
        assert_eq!(run.points[20].volume_ml, 4.0);
        assert_eq!(run.points[20].alpha_free_deg, 100.0);
        assert!((run.points[20].tool_deficit_deg() - 13.0).abs() < 1e-12);
        assert!(run.report.passed());
        assert_eq!(
            run.report.verdict(Requirement::TipRate),
            super::super::Verdict::NotEvaluated
        );
    }

    #[test]
    fn zero_increment_is_a_config_error() {
        let mut cfg = SimConfig::default();
        cfg.experiments.sweep_step_ml = 0.0;
        let err = run_sweep(&Scenario::new("t", cfg)).unwrap_err();
        assert!(matches!(err, HarnessError::Config(ConfigError::Experiment(_))));
    }
}
