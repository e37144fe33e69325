//! Websocket endpoint at `/ws`.
//!
//! On connect the server sends `hello`, then streams `state` at `state_hz`
//! and `frame` at `frame_hz`. Each client message gets exactly one `ack` or
//! `fault`. The first client to connect holds command authority until it
//! disconnects or releases it; others may claim it once it is free.

use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::IntoResponse;
use axum::routing::get;
use axum::Router;
use futures_util::{SinkExt, StreamExt};
use serde_json::Value;
use tokio::net::TcpListener;
use tokio::sync::mpsc;
use tokio::task::JoinHandle;
use tokio::time::MissedTickBehavior;

use crate::live::{LiveConfig, LiveError, LiveLoop};
use crate::protocol::{
    AckPayload, CommandPayload, FaultPayload, FramePayload, HelloPayload, MessageKind, ProtocolError, StatePayload,
    WireMessage, WireRecord, PROTOCOL_VERSION,
};

/// Who may send control commands.
#[derive(Debug, Default)]
pub struct Authority {
    holder: Mutex<Option<u64>>,
}

impl Authority {
    pub fn holder(&self) -> Option<u64> {
        *self.holder.lock().unwrap()
    }

    /// Grants authority to `client` if nobody holds it.
    pub fn claim(&self, client: u64) -> bool {
        let mut h = self.holder.lock().unwrap();
        match *h {
            None => {
                *h = Some(client);
                true
            }
            Some(c) => c == client,
        }
    }

    pub fn release(&self, client: u64) -> bool {
        let mut h = self.holder.lock().unwrap();
        if *h == Some(client) {
            *h = None;
            true
        } else {
            false
        }
    }
}

/// Shared state behind every connection.
pub struct Service {
    pub live: LiveLoop,
    pub config: LiveConfig,
    pub authority: Authority,
    next_client: AtomicU64,
}

/// Per-connection bookkeeping for incoming messages.
#[derive(Debug, Default)]
pub struct ClientSession {
    pub id: u64,
    last_seq: Option<u64>,
    last_command: Option<Instant>,
}

impl ClientSession {
    pub fn new(id: u64) -> Self {
        Self { id, ..Self::default() }
    }
}

/// Reply to one client message.
#[derive(Debug, Clone, PartialEq)]
pub enum Reply {
    Ack(AckPayload),
    Fault(FaultPayload),
}

impl Reply {
    fn fault(ack_seq: Option<u64>, code: &str, message: impl Into<String>) -> Self {
        Self::Fault(FaultPayload {
            ack_seq,
            code: code.to_string(),
            message: message.into(),
        })
    }

    fn protocol(ack_seq: Option<u64>, e: &ProtocolError) -> Self {
        Self::fault(ack_seq, e.code(), e.to_string())
    }

    pub fn kind(&self) -> MessageKind {
        match self {
            Self::Ack(_) => MessageKind::Ack,
            Self::Fault(_) => MessageKind::Fault,
        }
    }

    fn payload(&self) -> Value {
        match self {
            Self::Ack(a) => serde_json::to_value(a),
            Self::Fault(f) => serde_json::to_value(f),
        }
        .expect("reply serialises")
    }
}

impl Service {
    pub fn new(live: LiveLoop, config: LiveConfig) -> Self {
        Self {
            live,
            config,
            authority: Authority::default(),
            next_client: AtomicU64::new(1),
        }
    }

    pub fn connect(&self) -> ClientSession {
        let id = self.next_client.fetch_add(1, Ordering::Relaxed);
        self.authority.claim(id);
        ClientSession::new(id)
    }

    pub fn disconnect(&self, session: &ClientSession) {
        // The loop keeps its last command; no stop is issued.
        self.authority.release(session.id);
    }

    /// Validates one text frame from `session` and, for commands, applies it.
    pub async fn handle_text(&self, session: &mut ClientSession, text: &str) -> Reply {
        let msg = match WireMessage::parse(text) {
            Ok(m) => m,
            Err(e) => return Reply::protocol(None, &e),
        };
        if let Some(last) = session.last_seq.filter(|&l| msg.seq <= l) {
            return Reply::protocol(Some(msg.seq), &ProtocolError::OutOfOrder { last, got: msg.seq });
        }
        session.last_seq = Some(msg.seq);
        self.handle_command(session, &msg).await
    }

    pub async fn handle_command(&self, session: &mut ClientSession, msg: &WireMessage) -> Reply {
        let seq = Some(msg.seq);
        if msg.kind != MessageKind::Command {
            return Reply::fault(
                seq,
                "unexpected_kind",
                format!("clients may only send commands, got {:?}", msg.kind),
            );
        }
        let cmd: CommandPayload = match msg.payload_as() {
            Ok(c) => c,
            Err(e) => return Reply::protocol(seq, &e),
        };
        let ack = |angle_deg: f64, clamped: bool| {
            Reply::Ack(AckPayload {
                ack_seq: msg.seq,
                command: cmd.name().to_string(),
                clamped,
                angle_deg,
            })
        };
        let current = || self.live.latest().map_or(0.0, |s| s.record.alpha_cmd_deg);
        match cmd {
            CommandPayload::ClaimAuthority => {
                return if self.authority.claim(session.id) {
                    ack(current(), false)
                } else {
                    Reply::fault(seq, "unauthorized", "another client holds command authority")
                };
            }
            CommandPayload::ReleaseAuthority => {
                return if self.authority.release(session.id) {
                    ack(current(), false)
                } else {
                    Reply::fault(seq, "unauthorized", "this client does not hold command authority")
                };
            }
            _ => {}
        }
        if self.authority.holder() != Some(session.id) {
            return Reply::fault(seq, "unauthorized", "this client does not hold command authority");
        }
        let now = Instant::now();
        let min_gap = Duration::from_secs_f64(1.0 / self.config.command_rate_hz);
        if !cmd.is_safety() && session.last_command.is_some_and(|t| now.duration_since(t) < min_gap) {
            return Reply::fault(
                seq,
                "rate_limited",
                format!("commands are limited to {} Hz", self.config.command_rate_hz),
            );
        }
        let control = cmd.control().expect("authority requests handled above");
        let pending = match self.live.submit(control) {
            Ok(rx) => rx,
            Err(LiveError::QueueFull) => return Reply::fault(seq, "busy", "command queue is full"),
            Err(LiveError::Stopped) => return Reply::fault(seq, "stopped", "control loop has stopped"),
        };
        // Safety commands neither wait for nor restart the rate-limit window.
        if !cmd.is_safety() {
            session.last_command = Some(now);
        }
        match pending.await {
            Ok(outcome) => ack(outcome.alpha_cmd_deg, outcome.clamped),
            Err(_) => Reply::fault(seq, "stopped", "control loop stopped before applying the command"),
        }
    }
}

pub fn router(service: Arc<Service>) -> Router {
    Router::new().route("/ws", get(upgrade)).with_state(service)
}

async fn upgrade(ws: WebSocketUpgrade, State(service): State<Arc<Service>>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| client(socket, service))
}

async fn client(socket: WebSocket, service: Arc<Service>) {
    let mut session = service.connect();
    let (mut sink, mut stream) = socket.split();
    let (reply_tx, mut reply_rx) = mpsc::channel::<Reply>(32);

    let writer_service = service.clone();
    let client_id = session.id;
    let writer = tokio::spawn(async move {
        let svc = writer_service;
        let mut seq = 0u64;
        let mut send = |kind: MessageKind, payload: Value| {
            seq += 1;
            let msg = WireMessage {
                kind,
                seq,
                ts_ms: svc.live.elapsed_ms(),
                payload,
            };
            Message::Text(msg.to_json().into())
        };
        let hello = HelloPayload {
            server: "cardioscope".into(),
            protocol: PROTOCOL_VERSION,
            client_id,
            authority: svc.authority.holder() == Some(client_id),
            state_hz: svc.config.state_hz,
            frame_hz: svc.config.frame_hz,
            command_rate_hz: svc.config.command_rate_hz,
        };
        if sink
            .send(send(MessageKind::Hello, serde_json::to_value(hello).unwrap()))
            .await
            .is_err()
        {
            return;
        }
        let mut state_tick = tokio::time::interval(Duration::from_secs_f64(1.0 / svc.config.state_hz));
        state_tick.set_missed_tick_behavior(MissedTickBehavior::Delay);
        let mut frame_tick = tokio::time::interval(Duration::from_secs_f64(1.0 / svc.config.frame_hz));
        frame_tick.set_missed_tick_behavior(MissedTickBehavior::Skip);
        let mut last_frame = None;
        loop {
            let out = tokio::select! {
                reply = reply_rx.recv() => match reply {
                    Some(r) => send(r.kind(), r.payload()),
                    None => break,
                },
                _ = state_tick.tick() => {
                    let Some(s) = svc.live.latest() else { continue };
                    let payload = StatePayload {
                        tick: s.tick,
                        record: WireRecord::from(&s.record),
                        mode: s.mode,
                        estop: s.estop,
                        saturated: s.saturated,
                        authority: svc.authority.holder(),
                    };
                    send(MessageKind::State, serde_json::to_value(payload).unwrap())
                }
                _ = frame_tick.tick() => {
                    // Latest wins: an unchanged or missed frame is simply skipped.
                    let Some(s) = svc.live.latest() else { continue };
                    if last_frame == Some(s.tick) {
                        continue;
                    }
                    last_frame = Some(s.tick);
                    let payload = FramePayload::from_png(s.tick, s.frame.width(), s.frame.height(), s.png());
                    send(MessageKind::Frame, serde_json::to_value(payload).unwrap())
                }
            };
            if sink.send(out).await.is_err() {
                break;
            }
        }
    });

    while let Some(Ok(msg)) = stream.next().await {
        let reply = match msg {
            Message::Text(text) => service.handle_text(&mut session, text.as_str()).await,
            Message::Binary(_) => Reply::fault(None, "malformed", "binary frames are not part of the protocol"),
            Message::Close(_) => break,
            Message::Ping(_) | Message::Pong(_) => continue,
        };
        if reply_tx.send(reply).await.is_err() {
            break;
        }
    }
    drop(reply_tx);
    writer.abort();
    service.disconnect(&session);
}

/// A running service bound to a local address.
pub struct ServerHandle {
    pub addr: SocketAddr,
    pub service: Arc<Service>,
    task: JoinHandle<std::io::Result<()>>,
}

impl ServerHandle {
    pub fn url(&self) -> String {
        format!("ws://{}/ws", self.addr)
    }

    pub fn abort(&self) {
        self.task.abort();
    }

    /// Runs until the server stops.
    pub async fn wait(self) -> std::io::Result<()> {
        self.task.await.unwrap_or(Ok(()))
    }
}

/// Binds `addr` and serves in the background.
pub async fn start(addr: SocketAddr, live: LiveLoop, config: LiveConfig) -> std::io::Result<ServerHandle> {
    let listener = TcpListener::bind(addr).await?;
    let addr = listener.local_addr()?;
    let service = Arc::new(Service::new(live, config));
    let app = router(service.clone());
    let task = tokio::spawn(async move { axum::serve(listener, app).await });
    Ok(ServerHandle { addr, service, task })
}
