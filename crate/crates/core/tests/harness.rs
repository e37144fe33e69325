mod common;

use std::path::PathBuf;

use cardioscope::config::SimConfig;
use cardioscope::control::CommandScript;
use cardioscope::harness::{
    replay_operator, run_calibration, run_step, run_sweep, run_tool_compensation, CalibrationSource, Requirement,
    Scenario, Verdict,
};
use cardioscope::Calibration;

fn repo_file(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn calibration() -> Calibration {
    Calibration::load(&common::data_dir().join("calibration_default.toml")).unwrap()
}

fn scenario(name: &str, cfg: SimConfig) -> Scenario {
    Scenario::new(name, cfg).with_calibration(CalibrationSource::Given(calibration()))
}

/// `(time_s, alpha_cmd_deg, alpha_true_deg)` straight from trace CSV text.
fn raw_columns(csv: &str) -> Vec<(f64, f64, f64)> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let (t, c, a) = (col("time_s"), col("alpha_cmd_deg"), col("alpha_true_deg"));
    lines
        .map(|l| {
            let f: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            (f[t], f[c], f[a])
        })
        .collect()
}

#[test]
fn shipped_config_matches_defaults() {
    let cfg = SimConfig::load(&repo_file("config/default.toml")).unwrap();
    assert_eq!(cfg, SimConfig::default());
    let back = SimConfig::from_toml_str(&cfg.to_toml(), &PathBuf::from("roundtrip")).unwrap();
    assert_eq!(back, cfg);
}

#[test]
fn config_errors_name_the_file_and_key() {
    let err =
        SimConfig::from_toml_str("[control]\ncamera_rate_hz = \"fast\"\n", &PathBuf::from("bad.toml")).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("bad.toml") && msg.contains("camera_rate_hz"), "{msg}");
    assert!(SimConfig::from_toml_str("[plant]\nwidth_mm = 3\n", &PathBuf::from("x")).is_err());
    let mut cfg = SimConfig::default();
    cfg.experiments.toolcomp_remove_s = 5.0;
    assert!(cfg.validate().is_err());
}

#[test]
fn shipped_scripts_parse() {
    let knob =
        CommandScript::parse_knob_trace(&std::fs::read_to_string(repo_file("config/knob_staircase.csv")).unwrap())
            .unwrap();
    assert_eq!(knob.commands.len(), 4);
    let tool = CommandScript::load(&repo_file("config/toolcomp_script.csv")).unwrap();
    assert_eq!(tool.commands.len(), 3);
}

#[test]
fn sweep_writes_its_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let run = run_sweep(&Scenario::new("files", SimConfig::default()).with_out_dir(dir.path())).unwrap();
    assert!(run.report.passed());
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), run.points.len() + 1);
    assert!(csv.starts_with("volume_ml,d2_mm,alpha_free_deg,alpha_tool_deg,tool_deficit_deg\n"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("sweep_report.json")).unwrap()).unwrap();
    assert_eq!(report["experiment"], "sweep");
    assert_eq!(report["verdicts"].as_array().unwrap().len(), 7);
}

#[test]
fn calibration_writes_a_loadable_file() {
    let dir = tempfile::tempdir().unwrap();
    let run = run_calibration(
        &Scenario::new("files", SimConfig::default()).with_out_dir(dir.path()),
        false,
    )
    .unwrap();
    let loaded = Calibration::load(&dir.path().join("calibration.toml")).unwrap();
    assert_eq!(loaded, run.calibration);
    for name in [
        "calibration_samples.csv",
        "calibration_curve.csv",
        "calibration_report.json",
    ] {
        assert!(dir.path().join(name).is_file(), "{name}");
    }
}

#[test]
fn step_metrics_are_reproducible_from_the_saved_trace() {
    let mut cfg = SimConfig::default();
    cfg.experiments.step_repeats = 1;
    let dir = tempfile::tempdir().unwrap();
    let run = run_step(&scenario("step", cfg).with_seed(11).with_out_dir(dir.path())).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("step_trace_0.csv")).unwrap();
    assert_eq!(csv, run.trials[0].csv);

    let rows = raw_columns(&csv);
    let start = rows[0].2;
    let target = rows[0].1;
    assert_eq!(target, 60.0);
    // Settling: the first sample after the last one outside the band.
    let last_out = rows.iter().rposition(|r| (r.2 - target).abs() > 2.0).unwrap();
    let settle = rows[last_out + 1].0;
    let rate = (target - start) / settle;
    let overshoot = rows.iter().map(|r| r.2 - target).fold(f64::NEG_INFINITY, f64::max);
    let end = rows.last().unwrap().0;
    let steady = rows
        .iter()
        .filter(|r| r.0 >= end - 1.0)
        .map(|r| (r.2 - target).abs())
        .fold(0.0, f64::max);

    let m = &run.trials[0].metrics;
    assert_eq!(m.settle_time_s, Some(settle));
    assert_eq!(m.mean_rate_deg_s, Some(rate));
    assert_eq!(m.overshoot_deg, overshoot);
    assert_eq!(m.steady_state_error_deg, steady);
    assert_eq!(run.report.settle_time_s, Some(settle));
    assert!(settle <= 6.0 && rate >= 10.0, "{settle} {rate}");
    assert_eq!(run.report.verdict(Requirement::TipRate), Verdict::Pass);
    assert_eq!(run.report.verdict(Requirement::AngleError), Verdict::Pass);

    let smoothed = std::fs::read_to_string(dir.path().join("step_smoothed_0.csv")).unwrap();
    assert_eq!(smoothed.lines().count(), rows.len() + 1);
    assert!(dir.path().join("step_report.json").is_file());
}

#[test]
fn zero_step_has_no_rate() {
    let mut cfg = SimConfig::default();
    cfg.experiments.step_repeats = 1;
    cfg.experiments.step_target_deg = 0.0;
    cfg.experiments.step_duration_s = 2.0;
    let run = run_step(&scenario("zero", cfg)).unwrap();
    let m = &run.trials[0].metrics;
    assert_eq!(m.settle_time_s, Some(0.0));
    assert!(m.rate_undefined());
    assert!(run.report.rate_undefined);
    assert_eq!(run.report.mean_rate_deg_s, None);
    assert_eq!(run.report.verdict(Requirement::TipRate), Verdict::NotEvaluated);
    assert_eq!(run.report.verdict(Requirement::AngleError), Verdict::Pass);
}

#[test]
fn tool_events_push_the_angle_the_right_way() {
    let mut cfg = SimConfig::default();
    cfg.experiments.toolcomp_insert_s = 3.0;
    cfg.experiments.toolcomp_remove_s = 9.0;
    cfg.experiments.toolcomp_duration_s = 15.0;
    let run = run_tool_compensation(&scenario("tool", cfg)).unwrap();
    assert_eq!(run.events.len(), 2);
    for ev in &run.events {
        assert!(ev.direction_ok(), "{ev:?}");
        assert!(ev.recovery_s.is_some_and(|r| r <= 5.0), "{ev:?}");
        assert!(ev.steady_state_error_deg <= 2.0);
    }
    // Insertion drops the angle by the tool offset at this bend.
    let ins = &run.events[0];
    let expected = 13.0 * ins.alpha_before_deg / 100.0;
    assert!(
        (ins.alpha_before_deg - ins.alpha_after_deg - expected).abs() < 1e-4,
        "{ins:?}"
    );
    assert_eq!(run.report.verdict(Requirement::AngleError), Verdict::Pass);
}

#[test]
fn staircase_replay_matches_reference_trace() {
    let knob =
        CommandScript::parse_knob_trace(&std::fs::read_to_string(repo_file("config/knob_staircase.csv")).unwrap())
            .unwrap();
    let run = replay_operator(&scenario("replay", SimConfig::default()), &knob).unwrap();

    let levels: Vec<f64> = run.steps.iter().map(|s| s.command_deg).collect();
    assert_eq!(levels, [0.0, 20.0, 50.0, 80.0]);
    for s in &run.steps {
        assert!(s.settle_time_s.is_some_and(|t| t <= 6.0), "{s:?}");
        assert!(s.steady_state_error_deg <= 2.0, "{s:?}");
    }
    assert_eq!(run.report.verdict(Requirement::AngleError), Verdict::Pass);

    let path = common::data_dir().join("replay_staircase_trace.csv");
    if std::env::var_os("CARDIOSCOPE_BLESS").is_some() {
        std::fs::write(&path, &run.csv).unwrap();
    }
    let reference = std::fs::read_to_string(&path).unwrap();
    assert!(reference == run.csv, "replay trace differs from {}", path.display());
}

#[test]
fn replay_rejects_empty_knob_traces() {
    let empty = CommandScript::default();
    assert!(replay_operator(&scenario("replay", SimConfig::default()), &empty).is_err());
}
