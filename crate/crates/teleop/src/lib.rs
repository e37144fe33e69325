//! Live teleoperation: the closed loop in real time behind a websocket
//! command and telemetry interface.

pub mod live;
pub mod protocol;
pub mod server;

pub use live::{live_executor, LiveConfig, LiveError, LiveLoop, Snapshot};
pub use protocol::{
    AckPayload, CommandPayload, FaultPayload, FramePayload, HelloPayload, MessageKind, ProtocolError, StatePayload,
    WireMessage, WireRecord, PROTOCOL_VERSION,
};
pub use server::{router, start, Authority, ClientSession, Reply, ServerHandle, Service};
