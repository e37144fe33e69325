#![allow(dead_code)]

use std::path::PathBuf;
use std::time::Duration;

use futures_util::{SinkExt, StreamExt};
use serde_json::{json, Value};
use tokio::net::TcpStream;
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{connect_async, MaybeTlsStream, WebSocketStream};

use cardioscope::config::SimConfig;
use cardioscope::Calibration;
use cardioscope_teleop::{live_executor, start, LiveConfig, LiveLoop, MessageKind, ServerHandle, WireMessage};

pub const WAIT: Duration = Duration::from_secs(20);

pub fn calibration() -> Calibration {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data/v1/calibration_default.toml");
    Calibration::load(&path).unwrap()
}

pub async fn serve(config: LiveConfig) -> ServerHandle {
    let executor = live_executor(&SimConfig::default(), calibration(), 0).unwrap();
    let live = LiveLoop::spawn(executor, &config);
    start("127.0.0.1:0".parse().unwrap(), live, config).await.unwrap()
}

/// A test console: sends numbered commands and reads typed messages.
pub struct Client {
    ws: WebSocketStream<MaybeTlsStream<TcpStream>>,
    pub seq: u64,
    /// Messages from the server, in arrival order.
    pub seen: Vec<WireMessage>,
}

impl Client {
    pub async fn connect(server: &ServerHandle) -> Self {
        let (ws, _) = connect_async(server.url()).await.unwrap();
        Self {
            ws,
            seq: 0,
            seen: Vec::new(),
        }
    }

    pub async fn send_raw(&mut self, text: String) {
        self.ws.send(Message::Text(text.into())).await.unwrap();
    }

    /// Sends a command payload with the next sequence number; returns it.
    pub async fn send(&mut self, payload: Value) -> u64 {
        self.seq += 1;
        let text = json!({"kind": "command", "seq": self.seq, "ts_ms": 0, "payload": payload}).to_string();
        self.send_raw(text).await;
        self.seq
    }

    /// Next message from the server, or `None` after `limit`.
    pub async fn recv_within(&mut self, limit: Duration) -> Option<WireMessage> {
        loop {
            let msg = tokio::time::timeout(limit, self.ws.next()).await.ok()??.unwrap();
            if let Message::Text(t) = msg {
                let m = WireMessage::parse(t.as_str()).unwrap();
                self.seen.push(m.clone());
                return Some(m);
            }
        }
    }

    pub async fn next_of(&mut self, kind: MessageKind) -> WireMessage {
        tokio::time::timeout(WAIT, async {
            loop {
                let m = self.recv_within(WAIT).await.expect("server went quiet");
                if m.kind == kind {
                    return m;
                }
            }
        })
        .await
        .expect("timed out waiting for message")
    }

    /// The ack or fault answering `seq`.
    pub async fn reply_to(&mut self, seq: u64) -> WireMessage {
        tokio::time::timeout(WAIT, async {
            loop {
                let m = self.recv_within(WAIT).await.expect("server went quiet");
                if matches!(m.kind, MessageKind::Ack | MessageKind::Fault) && m.payload["ack_seq"] == json!(seq) {
                    return m;
                }
            }
        })
        .await
        .expect("timed out waiting for reply")
    }

    pub async fn command(&mut self, payload: Value) -> WireMessage {
        let seq = self.send(payload).await;
        self.reply_to(seq).await
    }

    /// Waits for a state message satisfying `pred`.
    pub async fn state_where(&mut self, pred: impl Fn(&Value) -> bool) -> Value {
        tokio::time::timeout(WAIT, async {
            loop {
                let m = self.next_of(MessageKind::State).await;
                if pred(&m.payload) {
                    return m.payload;
                }
            }
        })
        .await
        .expect("state never reached")
    }

    pub async fn close(mut self) {
        let _ = self.ws.close(None).await;
    }
}
