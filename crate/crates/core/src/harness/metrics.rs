//! Step-response metrics and requirement verdicts.
//!
//! Definitions:
//!
//! - settle time: time from the step to the first sample inside the band
//!   `|alpha - alpha_c| <= band` after which the trace never leaves it;
//! - overshoot: the largest excursion past the command in the direction of
//!   the step (`max alpha - alpha_c` for a rising step), negative if the
//!   command was never reached;
//! - mean rate: step magnitude over settle time, undefined for a zero step;
//! - steady-state error: largest `|alpha - alpha_c|` over a trailing window.
//!
//! All of these read only the `time_s`, `alpha_cmd_deg` and `alpha_true_deg`
//! columns, so they can be recomputed from a saved CSV.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::control::{Trace, TraceRecord};

/// Settle band, degrees.
pub const SETTLE_BAND_DEG: f64 = 2.0;
/// Required mean tip rate, degrees per second.
pub const MIN_RATE_DEG_S: f64 = 10.0;
/// Required time to complete a 0 to 60 degree step, s.
pub const MAX_STEP_SETTLE_S: f64 = 6.0;
/// Required minimum bend angle, degrees.
pub const MIN_MAX_ANGLE_DEG: f64 = 60.0;
/// Required minimum working channel bore, mm.
pub const MIN_CHANNEL_ID_MM: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Pass,
    Fail,
    NotEvaluated,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Pass => "PASS",
            Self::Fail => "FAIL",
            Self::NotEvaluated => "N/A",
        })
    }
}

/// Rows of the device requirement table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Requirement {
    CollapsedDiameter,
    FaceDiameter,
    MaxBendAngle,
    ChannelBore,
    Decoupling,
    TipRate,
    AngleError,
}

impl Requirement {
    pub const ALL: [Requirement; 7] = [
        Self::CollapsedDiameter,
        Self::FaceDiameter,
        Self::MaxBendAngle,
        Self::ChannelBore,
        Self::Decoupling,
        Self::TipRate,
        Self::AngleError,
    ];

    pub fn row(self) -> u8 {
        Self::ALL.iter().position(|&r| r == self).unwrap() as u8 + 1
    }

    pub fn target(self) -> &'static str {
        match self {
            Self::CollapsedDiameter => "D1 <= 5 mm",
            Self::FaceDiameter => "8 mm <= D2 <= 11 mm",
            Self::MaxBendAngle => "alpha_max >= 60 deg",
            Self::ChannelBore => "D3 >= 0.5 mm",
            Self::Decoupling => "alpha != 0 implies D2 >= 8 mm",
            Self::TipRate => "alpha rate >= 10 deg/s",
            Self::AngleError => "|alpha - alpha_c| <= 2 deg",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequirementVerdict {
    pub row: u8,
    pub requirement: Requirement,
    pub target: String,
    pub verdict: Verdict,
    pub detail: String,
}

/// Summary of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub scenario: String,
    pub experiment: String,
    pub seed: u64,
    pub settle_time_s: Option<f64>,
    pub overshoot_deg: Option<f64>,
    pub mean_rate_deg_s: Option<f64>,
    /// Set when the rate has no meaning, e.g. a zero-magnitude step.
    pub rate_undefined: bool,
    pub steady_state_error_deg: Option<f64>,
    pub decoupling: Option<bool>,
    /// Experiment-specific scalars.
    pub values: BTreeMap<String, f64>,
    /// One entry per requirement row, in row order.
    pub verdicts: Vec<RequirementVerdict>,
}

impl MetricsReport {
    pub fn new(scenario: &str, experiment: &str, seed: u64) -> Self {
        Self {
            scenario: scenario.to_string(),
            experiment: experiment.to_string(),
            seed,
            settle_time_s: None,
            overshoot_deg: None,
            mean_rate_deg_s: None,
            rate_undefined: false,
            steady_state_error_deg: None,
            decoupling: None,
            values: BTreeMap::new(),
            verdicts: Requirement::ALL
                .iter()
                .map(|&r| RequirementVerdict {
                    row: r.row(),
                    requirement: r,
                    target: r.target().to_string(),
                    verdict: Verdict::NotEvaluated,
                    detail: String::new(),
                })
                .collect(),
        }
    }

    pub fn judge(&mut self, requirement: Requirement, pass: bool, detail: impl Into<String>) {
        let v = &mut self.verdicts[requirement.row() as usize - 1];
        v.verdict = if pass { Verdict::Pass } else { Verdict::Fail };
        v.detail = detail.into();
    }

    pub fn verdict(&self, requirement: Requirement) -> Verdict {
        self.verdicts[requirement.row() as usize - 1].verdict
    }

    pub fn record(&mut self, key: &str, value: f64) {
        self.values.insert(key.to_string(), value);
    }

    /// No evaluated requirement failed.
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.verdict != Verdict::Fail)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises to JSON")
    }

    /// Human-readable verdict table.
    pub fn summary(&self) -> String {
        let mut out = format!("{} [{}] seed={}\n", self.experiment, self.scenario, self.seed);
        for v in &self.verdicts {
            out.push_str(&format!(
                "  {}) {:<32} {:<5} {}\n",
                v.row,
                v.target,
                v.verdict.to_string(),
                v.detail
            ));
        }
        out
    }
}

/// Response to a single commanded step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepMetrics {
    pub step_time_s: f64,
    pub start_deg: f64,
    pub command_deg: f64,
    pub settle_time_s: Option<f64>,
    /// First sample inside the band, whether or not it stays.
    pub first_entry_s: Option<f64>,
    pub overshoot_deg: f64,
    pub mean_rate_deg_s: Option<f64>,
    pub steady_state_error_deg: f64,
}

impl StepMetrics {
    pub fn magnitude_deg(&self) -> f64 {
        (self.command_deg - self.start_deg).abs()
    }

    pub fn rate_undefined(&self) -> bool {
        self.mean_rate_deg_s.is_none()
    }
}

/// Metrics for the step to `command_deg` issued at `step_time_s`, using the
/// records up to (excluding) `end_time_s`.
pub fn step_metrics(
    records: &[TraceRecord],
    step_time_s: f64,
    end_time_s: f64,
    start_deg: f64,
    command_deg: f64,
    band_deg: f64,
    tail_s: f64,
) -> StepMetrics {
    let window: Vec<&TraceRecord> = records
        .iter()
        .filter(|r| r.time_s >= step_time_s && r.time_s < end_time_s)
        .collect();
    let inside = |r: &TraceRecord| (r.alpha_true_deg - command_deg).abs() <= band_deg;
    let first_entry_s = window.iter().find(|r| inside(r)).map(|r| r.time_s - step_time_s);
    let settle_time_s = match window.iter().rposition(|r| !inside(r)) {
        None if !window.is_empty() => Some(0.0),
        None => None,
        Some(i) if i + 1 < window.len() => Some(window[i + 1].time_s - step_time_s),
        Some(_) => None,
    };
    let rising = command_deg >= start_deg;
    let overshoot_deg = window.iter().fold(f64::NEG_INFINITY, |acc, r| {
        let past = if rising {
            r.alpha_true_deg - command_deg
        } else {
            command_deg - r.alpha_true_deg
        };
        acc.max(past)
    });
    let magnitude = (command_deg - start_deg).abs();
    let mean_rate_deg_s = match settle_time_s {
        Some(t) if magnitude > 0.0 && t > 0.0 => Some(magnitude / t),
        _ => None,
    };
    let tail_start = window.last().map_or(end_time_s, |r| r.time_s - tail_s);
    let steady_state_error_deg = window
        .iter()
        .filter(|r| r.time_s >= tail_start)
        .fold(0.0_f64, |acc, r| acc.max((r.alpha_true_deg - command_deg).abs()));
    StepMetrics {
        step_time_s,
        start_deg,
        command_deg,
        settle_time_s,
        first_entry_s,
        overshoot_deg,
        mean_rate_deg_s,
        steady_state_error_deg,
    }
}

/// One [`StepMetrics`] per change of the commanded angle in `trace`,
/// each window ending at the next change.
pub fn command_steps(trace: &Trace, band_deg: f64, tail_s: f64) -> Vec<StepMetrics> {
    let r = &trace.records;
    if r.is_empty() {
        return Vec::new();
    }
    let mut starts = vec![0];
    for i in 1..r.len() {
        if r[i].alpha_cmd_deg != r[i - 1].alpha_cmd_deg {
            starts.push(i);
        }
    }
    let end = r[r.len() - 1].time_s + 1.0;
    starts
        .iter()
        .enumerate()
        .map(|(k, &i)| {
            let until = starts.get(k + 1).map_or(end, |&j| r[j].time_s);
            step_metrics(
                r,
                r[i].time_s,
                until,
                r[i].alpha_true_deg,
                r[i].alpha_cmd_deg,
                band_deg,
                tail_s,
            )
        })
        .collect()
}

/// Largest `|alpha - alpha_c|` over records with `from_s <= t < to_s`.
pub fn max_error_between(trace: &Trace, from_s: f64, to_s: f64) -> Option<f64> {
    trace
        .records
        .iter()
        .filter(|r| r.time_s >= from_s && r.time_s < to_s)
        .map(|r| (r.alpha_true_deg - r.alpha_cmd_deg).abs())
        .reduce(f64::max)
}
