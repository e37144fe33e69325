//! Closed-loop experiments: repeated steps, tool compensation and operator
//! replay.
//!
//! Metrics are always computed from the trace after a CSV round trip, so a
//! saved trace reproduces every number in the report.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::calibrate::state_for_angle;
use super::metrics::{
    command_steps, max_error_between, step_metrics, Requirement, StepMetrics, MAX_STEP_SETTLE_S, MIN_RATE_DEG_S,
    SETTLE_BAND_DEG,
};
use super::{HarnessError, MetricsReport, Scenario};
use crate::config::ConfigError;
use crate::control::{run_closed_loop, CommandScript, ControlCommand, Executor, TimedCommand, Trace};
use crate::estimation::{savgol_smooth, Signal, DEFAULT_WINDOW};
use crate::imaging::SceneModel;
use crate::{Calibration, PlantState};

/// Trailing window for steady-state error, s.
pub const STEADY_TAIL_S: f64 = 1.0;

fn execute(
    scenario: &Scenario,
    scene: SceneModel,
    cal: &Calibration,
    seed: u64,
    initial: PlantState,
    script: &CommandScript,
    duration_s: f64,
) -> Result<(String, Trace), HarnessError> {
    let cfg = &scenario.config;
    let mut loop_cfg = cfg.control.clone();
    loop_cfg.engage_on_start = true;
    let executor = Executor::new(
        cfg.build_plant()?,
        scene,
        cfg.sensor.clone(),
        cal.clone(),
        loop_cfg,
        seed,
    )?
    .with_state(initial);
    let csv = run_closed_loop(executor, script, duration_s)?.to_csv();
    let parsed = Trace::from_csv(&csv)?;
    Ok((csv, parsed))
}

fn smooth(xs: Vec<f64>, period_s: f64) -> Vec<f64> {
    if xs.len() < DEFAULT_WINDOW {
        return Vec::new();
    }
    savgol_smooth(&Signal::new(xs, period_s))
        .map(|s| s.samples)
        .unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepTrial {
    pub seed: u64,
    /// Trace exactly as written to disk.
    pub csv: String,
    pub trace: Trace,
    pub metrics: StepMetrics,
    /// Presentation-only smoothing of the true and estimated angle.
    pub smoothed_alpha_deg: Vec<f64>,
    pub smoothed_estimate_deg: Vec<f64>,
}

impl StepTrial {
    pub fn smoothed_csv(&self) -> String {
        let mut out = String::from("time_s,alpha_true_deg,alpha_true_sg_deg,alpha_est_deg,alpha_est_sg_deg\n");
        for (i, r) in self.trace.records.iter().enumerate() {
            let sg = |v: &[f64]| v.get(i).map_or("NaN".to_string(), |x| format!("{x:.6}"));
            let _ = writeln!(
                out,
                "{:.3},{:.6},{},{:.6},{}",
                r.time_s,
                r.alpha_true_deg,
                sg(&self.smoothed_alpha_deg),
                r.alpha_est_deg,
                sg(&self.smoothed_estimate_deg)
            );
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRun {
    pub trials: Vec<StepTrial>,
    pub report: MetricsReport,
}

/// Repeated steps from the configured starting volume to the target angle,
/// each with its own noise seed.
pub fn run_step(scenario: &Scenario) -> Result<StepRun, HarnessError> {
    let cfg = &scenario.config;
    let e = &cfg.experiments;
    let cal = scenario.resolve_calibration()?;
    let plant = cfg.build_plant()?;
    let initial = plant.state_at_volume(e.step_initial_volume_ml, false)?;
    let scene = cfg
        .scene
        .clone()
        .with_noise(e.step_noise_amplitude, e.step_radius_jitter_px);
    let script = CommandScript::single(
        0.0,
        ControlCommand::SetAngle {
            angle_deg: e.step_target_deg,
        },
    );
    let period = 1.0 / cfg.control.camera_rate_hz;

    let mut trials = Vec::new();
    for i in 0..e.step_repeats {
        let seed = scenario.seed.wrapping_add(i as u64);
        let (csv, trace) = execute(scenario, scene.clone(), &cal, seed, initial, &script, e.step_duration_s)?;
        let command = trace.records.first().map_or(e.step_target_deg, |r| r.alpha_cmd_deg);
        let metrics = step_metrics(
            &trace.records,
            0.0,
            f64::INFINITY,
            initial.angle_deg,
            command,
            SETTLE_BAND_DEG,
            STEADY_TAIL_S,
        );
        let smoothed_alpha_deg = smooth(trace.column(|r| r.alpha_true_deg), period);
        let smoothed_estimate_deg = smooth(trace.column(|r| r.alpha_est_deg), period);
        trials.push(StepTrial {
            seed,
            csv,
            trace,
            metrics,
            smoothed_alpha_deg,
            smoothed_estimate_deg,
        });
    }

    let mut report = MetricsReport::new(&scenario.name, "step", scenario.seed);
    let n = trials.len() as f64;
    let settles: Vec<Option<f64>> = trials.iter().map(|t| t.metrics.settle_time_s).collect();
    let all_settled = settles.iter().all(Option::is_some);
    let rates: Vec<Option<f64>> = trials.iter().map(|t| t.metrics.mean_rate_deg_s).collect();
    let max_overshoot = trials
        .iter()
        .map(|t| t.metrics.overshoot_deg)
        .fold(f64::NEG_INFINITY, f64::max);
    let max_steady = trials
        .iter()
        .map(|t| t.metrics.steady_state_error_deg)
        .fold(0.0, f64::max);
    let zero_step = trials.iter().all(|t| t.metrics.magnitude_deg() == 0.0);
    if all_settled {
        let s: Vec<f64> = settles.iter().flatten().copied().collect();
        report.settle_time_s = Some(s.iter().sum::<f64>() / n);
        report.record("settle_time_max_s", s.iter().copied().fold(0.0, f64::max));
    }
    report.overshoot_deg = Some(max_overshoot);
    report.steady_state_error_deg = Some(max_steady);
    report.rate_undefined = rates.iter().any(Option::is_none);
    if !report.rate_undefined {
        let r: Vec<f64> = rates.iter().flatten().copied().collect();
        report.mean_rate_deg_s = Some(r.iter().sum::<f64>() / n);
        report.record("rate_min_deg_s", r.iter().copied().fold(f64::INFINITY, f64::min));
    }
    report.record("trials", n);
    report.record("step_deg", trials.first().map_or(0.0, |t| t.metrics.magnitude_deg()));

    if !zero_step {
        let rate_ok = rates.iter().all(|r| r.is_some_and(|r| r >= MIN_RATE_DEG_S));
        let time_ok = settles.iter().all(|s| s.is_some_and(|s| s <= MAX_STEP_SETTLE_S));
        report.judge(
            Requirement::TipRate,
            rate_ok && time_ok,
            match (report.mean_rate_deg_s, report.settle_time_s) {
                (Some(r), Some(s)) => format!("mean rate {r:.2} deg/s, mean settle {s:.3} s over {n} trials"),
                _ => "a trial never settled".to_string(),
            },
        );
    }
    report.judge(
        Requirement::AngleError,
        all_settled && max_overshoot <= SETTLE_BAND_DEG && max_steady <= SETTLE_BAND_DEG,
        format!("overshoot {max_overshoot:.3} deg, steady-state error {max_steady:.3} deg"),
    );

    for (i, t) in trials.iter().enumerate() {
        scenario.emit(&format!("step_trace_{i}.csv"), &t.csv)?;
        scenario.emit(&format!("step_smoothed_{i}.csv"), &t.smoothed_csv())?;
    }
    scenario.emit("step_report.json", &report.to_json())?;
    Ok(StepRun { trials, report })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToolEvent {
    pub inserted: bool,
    pub time_s: f64,
    pub alpha_before_deg: f64,
    /// Angle on the first tick after the event.
    pub alpha_after_deg: f64,
    /// Largest deviation from the command before the next event, signed.
    pub transient_deg: f64,
    /// Time from the event until the angle is back in the band for good.
    pub recovery_s: Option<f64>,
    /// Largest error from `event + settle allowance` to the next event.
    pub steady_state_error_deg: f64,
}

impl ToolEvent {
    /// Insertion straightens the balloon; removal lets it bend further.
    pub fn direction_ok(&self) -> bool {
        if self.inserted {
            self.alpha_after_deg < self.alpha_before_deg && self.transient_deg < 0.0
        } else {
            self.alpha_after_deg > self.alpha_before_deg && self.transient_deg > 0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToolCompRun {
    pub csv: String,
    pub trace: Trace,
    pub events: Vec<ToolEvent>,
    pub report: MetricsReport,
}

fn tool_event(trace: &Trace, inserted: bool, at_s: f64, until_s: f64, command: f64, settle_s: f64) -> ToolEvent {
    let r = &trace.records;
    let eps = 1e-9;
    let before = r
        .iter()
        .rev()
        .find(|x| x.time_s < at_s - eps)
        .map_or(f64::NAN, |x| x.alpha_true_deg);
    let after = r
        .iter()
        .find(|x| x.time_s >= at_s - eps)
        .map_or(f64::NAN, |x| x.alpha_true_deg);
    let window: Vec<_> = r
        .iter()
        .filter(|x| x.time_s >= at_s - eps && x.time_s < until_s)
        .collect();
    let transient_deg = window
        .iter()
        .map(|x| x.alpha_true_deg - command)
        .fold(0.0_f64, |acc, d| if d.abs() > acc.abs() { d } else { acc });
    let m = step_metrics(r, at_s - eps, until_s, after, command, SETTLE_BAND_DEG, STEADY_TAIL_S);
    ToolEvent {
        inserted,
        time_s: at_s,
        alpha_before_deg: before,
        alpha_after_deg: after,
        transient_deg,
        recovery_s: m.settle_time_s.map(|s| s - eps),
        steady_state_error_deg: max_error_between(trace, at_s + settle_s, until_s).unwrap_or(f64::INFINITY),
    }
}

/// Holds the configured angle, inserts the tool, then removes it.
pub fn run_tool_compensation(scenario: &Scenario) -> Result<ToolCompRun, HarnessError> {
    let cfg = &scenario.config;
    let e = &cfg.experiments;
    let cal = scenario.resolve_calibration()?;
    let plant = cfg.build_plant()?;
    let initial = state_for_angle(&plant, e.toolcomp_angle_deg, false)?.ok_or_else(|| {
        ConfigError::Experiment(format!(
            "toolcomp_angle_deg {} is beyond the balloon's range",
            e.toolcomp_angle_deg
        ))
    })?;
    let script = CommandScript::new(vec![
        TimedCommand {
            time_s: 0.0,
            command: ControlCommand::SetAngle {
                angle_deg: e.toolcomp_angle_deg,
            },
        },
        TimedCommand {
            time_s: e.toolcomp_insert_s,
            command: ControlCommand::InsertTool,
        },
        TimedCommand {
            time_s: e.toolcomp_remove_s,
            command: ControlCommand::RemoveTool,
        },
    ])?;
    let (csv, trace) = execute(
        scenario,
        cfg.scene.clone(),
        &cal,
        scenario.seed,
        initial,
        &script,
        e.toolcomp_duration_s,
    )?;
    let command = trace.records.first().map_or(e.toolcomp_angle_deg, |r| r.alpha_cmd_deg);
    let end = e.toolcomp_duration_s + 1.0;
    let events = vec![
        tool_event(
            &trace,
            true,
            e.toolcomp_insert_s,
            e.toolcomp_remove_s,
            command,
            e.toolcomp_settle_s,
        ),
        tool_event(&trace, false, e.toolcomp_remove_s, end, command, e.toolcomp_settle_s),
    ];

    let mut report = MetricsReport::new(&scenario.name, "toolcomp", scenario.seed);
    let worst = events.iter().map(|ev| ev.steady_state_error_deg).fold(0.0, f64::max);
    let pre = max_error_between(&trace, 0.0, e.toolcomp_insert_s).unwrap_or(f64::INFINITY);
    report.steady_state_error_deg = Some(worst);
    report.record("initial_error_deg", pre);
    for ev in &events {
        let tag = if ev.inserted { "insert" } else { "remove" };
        report.record(&format!("{tag}_transient_deg"), ev.transient_deg);
        report.record(&format!("{tag}_steady_error_deg"), ev.steady_state_error_deg);
        report.record(&format!("{tag}_direction_ok"), f64::from(u8::from(ev.direction_ok())));
        if let Some(r) = ev.recovery_s {
            report.record(&format!("{tag}_recovery_s"), r);
        }
    }
    report.judge(
        Requirement::AngleError,
        worst <= SETTLE_BAND_DEG,
        format!(
            "error {:.3} deg after insertion, {:.3} deg after removal ({} s allowance)",
            events[0].steady_state_error_deg, events[1].steady_state_error_deg, e.toolcomp_settle_s
        ),
    );
    scenario.emit("toolcomp_trace.csv", &csv)?;
    scenario.emit("toolcomp_report.json", &report.to_json())?;
    Ok(ToolCompRun {
        csv,
        trace,
        events,
        report,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayRun {
    pub csv: String,
    pub trace: Trace,
    /// One entry per change of the commanded angle.
    pub steps: Vec<StepMetrics>,
    pub report: MetricsReport,
}

/// Feeds a recorded knob trace through the closed loop.
pub fn replay_operator(scenario: &Scenario, knob: &CommandScript) -> Result<ReplayRun, HarnessError> {
    let cfg = &scenario.config;
    let e = &cfg.experiments;
    if knob.commands.is_empty() {
        return Err(crate::control::ControlError::Script("knob trace has no samples".into()).into());
    }
    let cal = scenario.resolve_calibration()?;
    let plant = cfg.build_plant()?;
    let initial = plant.state_at_volume(e.replay_initial_volume_ml, false)?;
    let duration = knob.last_time() + e.replay_tail_s;
    let (csv, trace) = execute(
        scenario,
        cfg.scene.clone(),
        &cal,
        scenario.seed,
        initial,
        knob,
        duration,
    )?;
    let steps = command_steps(&trace, SETTLE_BAND_DEG, STEADY_TAIL_S);

    let mut report = MetricsReport::new(&scenario.name, "replay", scenario.seed);
    // Only levels held at least as long as the settle allowance are judged.
    let judged: Vec<&StepMetrics> = steps
        .iter()
        .zip(steps.iter().skip(1).map(|s| s.step_time_s).chain([duration]))
        .filter(|(s, end)| end - s.step_time_s >= e.replay_settle_s)
        .map(|(s, _)| s)
        .collect();
    let slowest = judged
        .iter()
        .map(|s| s.settle_time_s.unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max);
    let worst = judged.iter().map(|s| s.steady_state_error_deg).fold(0.0, f64::max);
    report.settle_time_s = Some(slowest).filter(|s| s.is_finite());
    report.steady_state_error_deg = Some(worst);
    report.record("levels", steps.len() as f64);
    report.record("levels_judged", judged.len() as f64);
    if !judged.is_empty() {
        report.judge(
            Requirement::AngleError,
            slowest <= e.replay_settle_s && worst <= SETTLE_BAND_DEG,
            format!(
                "{} levels, slowest settle {slowest:.3} s (allowance {} s), worst hold error {worst:.3} deg",
                judged.len(),
                e.replay_settle_s
            ),
        );
    }
    scenario.emit("replay_trace.csv", &csv)?;
    scenario.emit("replay_report.json", &report.to_json())?;
    Ok(ReplayRun {
        csv,
        trace,
        steps,
        report,
    })
}
