//! Time-stamped operator commands and script files.
//!
//! A script is CSV with header `time_s,command,value`. `command` is one of
//! `set_angle`, `inflate`, `insert_tool`, `remove_tool`, `estop`, `reset`;
//! only `set_angle` takes a value (degrees). Lines starting with `#` and
//! blank lines are ignored.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ControlError;

/// Commanded angles are limited to the balloon's working range.
pub const MAX_COMMAND_DEG: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ControlCommand {
    SetAngle { angle_deg: f64 },
    Inflate,
    InsertTool,
    RemoveTool,
    EStop,
    Reset,
}

impl ControlCommand {
    pub fn name(&self) -> &'static str {
        match self {
            Self::SetAngle { .. } => "set_angle",
            Self::Inflate => "inflate",
            Self::InsertTool => "insert_tool",
            Self::RemoveTool => "remove_tool",
            Self::EStop => "estop",
            Self::Reset => "reset",
        }
    }
}

/// Clamps a commanded angle into `[0, MAX_COMMAND_DEG]`; the flag reports
/// whether clamping happened.
pub fn clamp_command(angle_deg: f64) -> (f64, bool) {
    if angle_deg.is_nan() {
        return (0.0, true);
    }
    let c = angle_deg.clamp(0.0, MAX_COMMAND_DEG);
    (c, c != angle_deg)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimedCommand {
    pub time_s: f64,
    pub command: ControlCommand,
}

/// Time-ordered command list.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CommandScript {
    pub commands: Vec<TimedCommand>,
}

impl CommandScript {
    pub fn new(mut commands: Vec<TimedCommand>) -> Result<Self, ControlError> {
        if commands.iter().any(|c| !(c.time_s.is_finite() && c.time_s >= 0.0)) {
            return Err(ControlError::Script(
                "command times must be finite and non-negative".into(),
            ));
        }
        commands.sort_by(|a, b| a.time_s.total_cmp(&b.time_s));
        Ok(Self { commands })
    }

    pub fn single(time_s: f64, command: ControlCommand) -> Self {
        Self {
            commands: vec![TimedCommand { time_s, command }],
        }
    }

    pub fn parse(text: &str) -> Result<Self, ControlError> {
        let mut commands = Vec::new();
        let mut header_seen = false;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if !header_seen {
                header_seen = true;
                if fields == ["time_s", "command", "value"] {
                    continue;
                }
                return Err(ControlError::Script(format!(
                    "line {line_no}: expected header `time_s,command,value`"
                )));
            }
            if fields.len() != 3 {
                return Err(ControlError::Script(format!(
                    "line {line_no}: expected 3 fields, got {}",
                    fields.len()
                )));
            }
            let time_s: f64 = fields[0]
                .parse()
                .map_err(|_| ControlError::Script(format!("line {line_no}: bad time {:?}", fields[0])))?;
            let command = match (fields[1], fields[2]) {
                ("set_angle", v) => ControlCommand::SetAngle {
                    angle_deg: v
                        .parse()
                        .map_err(|_| ControlError::Script(format!("line {line_no}: bad angle {v:?}")))?,
                },
                ("inflate", "") => ControlCommand::Inflate,
                ("insert_tool", "") => ControlCommand::InsertTool,
                ("remove_tool", "") => ControlCommand::RemoveTool,
                ("estop", "") => ControlCommand::EStop,
                ("reset", "") => ControlCommand::Reset,
                (c, v) => {
                    return Err(ControlError::Script(format!(
                        "line {line_no}: unknown command {c:?} with value {v:?}"
                    )))
                }
            };
            commands.push(TimedCommand { time_s, command });
        }
        Self::new(commands)
    }

    pub fn load(path: &Path) -> Result<Self, ControlError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| ControlError::Script(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            ControlError::Script(m) => ControlError::Script(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("time_s,command,value\n");
        for c in &self.commands {
            let value = match c.command {
                ControlCommand::SetAngle { angle_deg } => angle_deg.to_string(),
                _ => String::new(),
            };
            out.push_str(&format!("{},{},{}\n", c.time_s, c.command.name(), value));
        }
        out
    }

    /// Knob recordings: CSV `time_s,angle_deg`, one set-angle command per row.
    pub fn parse_knob_trace(text: &str) -> Result<Self, ControlError> {
        let mut commands = Vec::new();
        let mut rows = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        match rows.next() {
            Some((_, h)) if h.split(',').map(str::trim).eq(["time_s", "angle_deg"]) => {}
            Some((n, _)) => {
                return Err(ControlError::Script(format!(
                    "line {n}: expected header `time_s,angle_deg`"
                )))
            }
            None => return Err(ControlError::Script("knob trace is empty".into())),
        }
        for (n, line) in rows {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let parsed = match fields.as_slice() {
                [t, a] => t.parse::<f64>().ok().zip(a.parse::<f64>().ok()),
                _ => None,
            };
            let (time_s, angle_deg) =
                parsed.ok_or_else(|| ControlError::Script(format!("line {n}: malformed row {line:?}")))?;
            if !angle_deg.is_finite() {
                return Err(ControlError::Script(format!("line {n}: angle must be finite")));
            }
            commands.push(TimedCommand {
                time_s,
                command: ControlCommand::SetAngle { angle_deg },
            });
        }
        if commands.is_empty() {
            return Err(ControlError::Script("knob trace has no samples".into()));
        }
        Self::new(commands)
    }

    pub fn last_time(&self) -> f64 {
        self.commands.last().map_or(0.0, |c| c.time_s)
    }
}
