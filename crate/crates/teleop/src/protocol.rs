//! Wire format shared with the operator console.
//!
//! Every message is one JSON text frame:
//!
//! ```json
//! {"kind": "command", "seq": 7, "ts_ms": 1520, "payload": {"type": "set_angle", "angle_deg": 60}}
//! ```
//!
//! `seq` strictly increases per direction and connection. `ts_ms` is the
//! sender's clock in milliseconds. See the README for every payload.

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine as _;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use cardioscope::control::{ControlCommand, LoopMode, TraceRecord};
use cardioscope::imaging::{Frame, ImagingError};
use cardioscope::plant::PumpLimit;

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageKind {
    Hello,
    State,
    Frame,
    Command,
    Fault,
    Ack,
}

impl MessageKind {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "hello" => Self::Hello,
            "state" => Self::State,
            "frame" => Self::Frame,
            "command" => Self::Command,
            "fault" => Self::Fault,
            "ack" => Self::Ack,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireMessage {
    pub kind: MessageKind,
    pub seq: u64,
    pub ts_ms: u64,
    pub payload: Value,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error("malformed message: {0}")]
    Malformed(String),
    #[error("unknown message kind {0:?}")]
    UnknownKind(String),
    #[error("malformed {kind:?} payload: {message}")]
    BadPayload { kind: MessageKind, message: String },
    #[error("sequence number {got} does not follow {last}")]
    OutOfOrder { last: u64, got: u64 },
}

impl ProtocolError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::Malformed(_) => "malformed",
            Self::UnknownKind(_) => "unknown_kind",
            Self::BadPayload { .. } => "bad_payload",
            Self::OutOfOrder { .. } => "out_of_order",
        }
    }
}

impl WireMessage {
    pub fn new(kind: MessageKind, seq: u64, ts_ms: u64, payload: impl Serialize) -> Self {
        Self {
            kind,
            seq,
            ts_ms,
            payload: serde_json::to_value(payload).expect("payload serialises"),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("message serialises")
    }

    /// Parses one text frame. Unknown kinds are reported separately from
    /// other malformations so the peer can be told which it was.
    pub fn parse(text: &str) -> Result<Self, ProtocolError> {
        let value: Value = serde_json::from_str(text).map_err(|e| ProtocolError::Malformed(e.to_string()))?;
        let kind = value
            .get("kind")
            .and_then(Value::as_str)
            .ok_or_else(|| ProtocolError::Malformed("missing string field `kind`".into()))?;
        if MessageKind::parse(kind).is_none() {
            return Err(ProtocolError::UnknownKind(kind.to_string()));
        }
        serde_json::from_value(value).map_err(|e| ProtocolError::Malformed(e.to_string()))
    }

    pub fn payload_as<T: for<'de> Deserialize<'de>>(&self) -> Result<T, ProtocolError> {
        serde_json::from_value(self.payload.clone()).map_err(|e| ProtocolError::BadPayload {
            kind: self.kind,
            message: e.to_string(),
        })
    }
}

/// Command payloads: the loop commands plus authority requests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum CommandPayload {
    SetAngle {
        angle_deg: f64,
    },
    Inflate,
    InsertTool,
    RemoveTool,
    #[serde(rename = "estop")]
    EStop,
    Reset,
    ClaimAuthority,
    ReleaseAuthority,
}

impl CommandPayload {
    pub fn name(&self) -> &'static str {
        match self {
            Self::ClaimAuthority => "claim_authority",
            Self::ReleaseAuthority => "release_authority",
            other => other.control().map_or("", |c| c.name()),
        }
    }

    pub fn control(&self) -> Option<ControlCommand> {
        Some(match *self {
            Self::SetAngle { angle_deg } => ControlCommand::SetAngle { angle_deg },
            Self::Inflate => ControlCommand::Inflate,
            Self::InsertTool => ControlCommand::InsertTool,
            Self::RemoveTool => ControlCommand::RemoveTool,
            Self::EStop => ControlCommand::EStop,
            Self::Reset => ControlCommand::Reset,
            Self::ClaimAuthority | Self::ReleaseAuthority => return None,
        })
    }

    /// Safety commands bypass the rate limit.
    pub fn is_safety(&self) -> bool {
        matches!(self, Self::EStop | Self::Reset)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HelloPayload {
    pub server: String,
    pub protocol: u32,
    pub client_id: u64,
    pub authority: bool,
    pub state_hz: f64,
    pub frame_hz: f64,
    pub command_rate_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AckPayload {
    /// `seq` of the command being acknowledged.
    pub ack_seq: u64,
    pub command: String,
    /// A set-angle value was outside 0..=100 and was clamped.
    pub clamped: bool,
    pub angle_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultPayload {
    /// `seq` of the offending message, when there is one.
    pub ack_seq: Option<u64>,
    pub code: String,
    pub message: String,
}

/// One control tick. Sensing values are `null` on a lost channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WireRecord {
    pub time_s: f64,
    pub alpha_cmd_deg: f64,
    pub p_target: f64,
    pub p_measured: Option<f64>,
    pub delta_p: Option<f64>,
    pub omega_rpm: f64,
    pub volume_ml: f64,
    pub alpha_true_deg: f64,
    pub alpha_est_deg: Option<f64>,
    pub d2_mm: f64,
    pub tool: bool,
    pub fault: bool,
}

impl From<&TraceRecord> for WireRecord {
    fn from(r: &TraceRecord) -> Self {
        let opt = |v: f64| Some(v).filter(|v| v.is_finite());
        Self {
            time_s: r.time_s,
            alpha_cmd_deg: r.alpha_cmd_deg,
            p_target: r.p_target,
            p_measured: opt(r.p_measured),
            delta_p: opt(r.delta_p),
            omega_rpm: r.omega_rpm,
            volume_ml: r.volume_ml,
            alpha_true_deg: r.alpha_true_deg,
            alpha_est_deg: opt(r.alpha_est_deg),
            d2_mm: r.d2_mm,
            tool: r.tool,
            fault: r.fault,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatePayload {
    pub tick: u64,
    pub record: WireRecord,
    pub mode: LoopMode,
    pub estop: bool,
    pub saturated: Option<PumpLimit>,
    /// Client currently holding command authority.
    pub authority: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FramePayload {
    pub tick: u64,
    pub width: u32,
    pub height: u32,
    pub format: String,
    /// Base64 (standard alphabet, padded) PNG bytes.
    pub data: String,
}

impl FramePayload {
    pub fn from_png(tick: u64, width: u32, height: u32, png: &[u8]) -> Self {
        Self {
            tick,
            width,
            height,
            format: "png".to_string(),
            data: BASE64.encode(png),
        }
    }

    pub fn decode(&self) -> Result<Frame, ProtocolError> {
        let bad = |message: String| ProtocolError::BadPayload {
            kind: MessageKind::Frame,
            message,
        };
        let bytes = BASE64.decode(&self.data).map_err(|e| bad(e.to_string()))?;
        Frame::from_png_bytes(&bytes).map_err(|e: ImagingError| bad(e.to_string()))
    }
}
