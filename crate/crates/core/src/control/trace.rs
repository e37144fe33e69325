//! Per-tick closed-loop records and their CSV form.
//!
//! Column order is fixed:
//!
//! ```text
//! time_s,alpha_cmd_deg,p_target,p_measured,delta_p,omega_rpm,volume_ml,
//! alpha_true_deg,alpha_est_deg,d2_mm,tool,fault
//! ```
//!
//! `tool` and `fault` are 0/1. On a sensing fault `p_measured`, `delta_p`
//! and `alpha_est_deg` are `NaN`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::ControlError;

pub const TRACE_COLUMNS: [&str; 12] = [
    "time_s",
    "alpha_cmd_deg",
    "p_target",
    "p_measured",
    "delta_p",
    "omega_rpm",
    "volume_ml",
    "alpha_true_deg",
    "alpha_est_deg",
    "d2_mm",
    "tool",
    "fault",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub time_s: f64,
    pub alpha_cmd_deg: f64,
    pub p_target: f64,
    pub p_measured: f64,
    pub delta_p: f64,
    pub omega_rpm: f64,
    pub volume_ml: f64,
    pub alpha_true_deg: f64,
    pub alpha_est_deg: f64,
    pub d2_mm: f64,
    pub tool: bool,
    pub fault: bool,
}

impl TraceRecord {
    /// Rounds every field to the precision used on disk.
    pub fn quantized(&self) -> Self {
        let q = |v: f64, digits: usize| num(v, digits).parse::<f64>().unwrap_or(v);
        Self {
            time_s: q(self.time_s, 3),
            alpha_cmd_deg: q(self.alpha_cmd_deg, 6),
            p_target: q(self.p_target, 8),
            p_measured: q(self.p_measured, 8),
            delta_p: q(self.delta_p, 8),
            omega_rpm: q(self.omega_rpm, 3),
            volume_ml: q(self.volume_ml, 7),
            alpha_true_deg: q(self.alpha_true_deg, 6),
            alpha_est_deg: q(self.alpha_est_deg, 6),
            d2_mm: q(self.d2_mm, 6),
            ..*self
        }
    }
}

fn num(v: f64, digits: usize) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else {
        format!("{v:.digits$}")
    }
}

/// Ordered stream of tick records.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
}

impl Trace {
    pub fn push(&mut self, r: TraceRecord) {
        self.records.push(r);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = TRACE_COLUMNS.join(",");
        out.push('\n');
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                num(r.time_s, 3),
                num(r.alpha_cmd_deg, 6),
                num(r.p_target, 8),
                num(r.p_measured, 8),
                num(r.delta_p, 8),
                num(r.omega_rpm, 3),
                num(r.volume_ml, 7),
                num(r.alpha_true_deg, 6),
                num(r.alpha_est_deg, 6),
                num(r.d2_mm, 6),
                u8::from(r.tool),
                u8::from(r.fault),
            );
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, ControlError> {
        let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
        let headers = reader.headers().map_err(|e| ControlError::TraceParse(e.to_string()))?;
        if headers.iter().ne(TRACE_COLUMNS.iter().copied()) {
            return Err(ControlError::TraceParse(format!("unexpected header {headers:?}")));
        }
        let mut trace = Trace::default();
        for (i, row) in reader.records().enumerate() {
            let row = row.map_err(|e| ControlError::TraceParse(e.to_string()))?;
            let line = i + 2;
            let f = |k: usize| -> Result<f64, ControlError> {
                row[k]
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| ControlError::TraceParse(format!("line {line}, column {}: {e}", TRACE_COLUMNS[k])))
            };
            let flag = |k: usize| -> Result<bool, ControlError> {
                match row[k].trim() {
                    "0" => Ok(false),
                    "1" => Ok(true),
                    other => Err(ControlError::TraceParse(format!(
                        "line {line}, column {}: expected 0 or 1, got {other:?}",
                        TRACE_COLUMNS[k]
                    ))),
                }
            };
            trace.push(TraceRecord {
                time_s: f(0)?,
                alpha_cmd_deg: f(1)?,
                p_target: f(2)?,
                p_measured: f(3)?,
                delta_p: f(4)?,
                omega_rpm: f(5)?,
                volume_ml: f(6)?,
                alpha_true_deg: f(7)?,
                alpha_est_deg: f(8)?,
                d2_mm: f(9)?,
                tool: flag(10)?,
                fault: flag(11)?,
            });
        }
        Ok(trace)
    }

    /// Column `f` of every record.
    pub fn column(&self, f: impl Fn(&TraceRecord) -> f64) -> Vec<f64> {
        self.records.iter().map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(t: f64) -> TraceRecord {
        TraceRecord {
            time_s: t,
            alpha_cmd_deg: 60.0,
            p_target: 0.123456789,
            p_measured: 0.1,
            delta_p: 0.023456789,
            omega_rpm: 100.0,
            volume_ml: 0.0000625 * 12345.0,
            alpha_true_deg: 12.3456789,
            alpha_est_deg: 12.1,
            d2_mm: 8.2,
            tool: true,
            fault: false,
        }
    }

    #[test]
    fn csv_round_trip_is_quantized() {
        let mut t = Trace::default();
        t.push(record(0.0));
        t.push(record(1.0 / 30.0));
        let back = Trace::from_csv(&t.to_csv()).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back.records[1], record(1.0 / 30.0).quantized());
        assert_eq!(back.to_csv(), t.to_csv());
    }

    #[test]
    fn volume_column_is_exact() {
        let csv = Trace {
            records: vec![record(0.0)],
        }
        .to_csv();
        assert!(csv.contains(",0.7715625,"));
    }

    #[test]
    fn fault_rows_keep_nan() {
        let mut r = record(0.0);
        r.fault = true;
        r.p_measured = f64::NAN;
        r.alpha_est_deg = f64::NAN;
        let back = Trace::from_csv(&Trace { records: vec![r] }.to_csv()).unwrap();
        assert!(back.records[0].fault);
        assert!(back.records[0].p_measured.is_nan());
    }

    #[test]
    fn rejects_bad_header_and_flags() {
        assert!(Trace::from_csv("a,b\n1,2\n").is_err());
        let mut csv = Trace {
            records: vec![record(0.0)],
        }
        .to_csv();
        csv = csv.replace(",1,0\n", ",2,0\n");
        assert!(Trace::from_csv(&csv).is_err());
    }
}
