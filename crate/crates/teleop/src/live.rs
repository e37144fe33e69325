//! The closed loop running in wall-clock time on its own thread.
//!
//! Commands enter through a bounded queue drained once per tick; each tick's
//! result is published through a watch channel that always holds only the
//! latest snapshot. Neither side can block the loop.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{sync_channel, Receiver, SyncSender, TryRecvError, TrySendError};
use std::sync::{Arc, OnceLock};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tokio::sync::{oneshot, watch};

use cardioscope::config::SimConfig;
use cardioscope::control::{
    CommandOutcome, ControlCommand, ControlError, Executor, LoopMode, TimedCommand, TraceRecord,
};
use cardioscope::imaging::Frame;
use cardioscope::plant::PumpLimit;
use cardioscope::Calibration;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LiveConfig {
    pub state_hz: f64,
    pub frame_hz: f64,
    /// Per-client limit on non-safety commands.
    pub command_rate_hz: f64,
    pub command_queue: usize,
    /// Simulated seconds per wall-clock second.
    pub speedup: f64,
}

impl Default for LiveConfig {
    fn default() -> Self {
        Self {
            state_hz: 15.0,
            frame_hz: 10.0,
            command_rate_hz: 50.0,
            command_queue: 64,
            speedup: 1.0,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum LiveError {
    #[error("command queue is full")]
    QueueFull,
    #[error("control loop has stopped")]
    Stopped,
}

/// Result of one tick, shared read-only with every client.
#[derive(Debug)]
pub struct Snapshot {
    pub tick: u64,
    pub record: TraceRecord,
    pub mode: LoopMode,
    pub estop: bool,
    pub saturated: Option<PumpLimit>,
    pub frame: Frame,
    png: OnceLock<Vec<u8>>,
}

impl Snapshot {
    /// PNG encoding of the frame, computed once on first use.
    pub fn png(&self) -> &[u8] {
        self.png.get_or_init(|| self.frame.to_png_bytes())
    }
}

struct CommandRequest {
    command: ControlCommand,
    received_ms: u64,
    reply: oneshot::Sender<CommandOutcome>,
}

/// Handle to the loop thread. Dropping it stops the loop.
pub struct LiveLoop {
    commands: SyncSender<CommandRequest>,
    snapshots: watch::Receiver<Option<Arc<Snapshot>>>,
    stop: Arc<AtomicBool>,
    thread: Option<JoinHandle<Result<(), ControlError>>>,
    started: Instant,
}

/// Executor for live use: waits for an inflate command and holds the pump at
/// a syringe limit instead of aborting.
pub fn live_executor(
    cfg: &SimConfig,
    cal: Calibration,
    seed: u64,
) -> Result<Executor, cardioscope::config::ConfigError> {
    let mut loop_cfg = cfg.control.clone();
    loop_cfg.engage_on_start = false;
    loop_cfg.abort_on_saturation = false;
    Ok(Executor::new(
        cfg.build_plant()?,
        cfg.scene.clone(),
        cfg.sensor.clone(),
        cal,
        loop_cfg,
        seed,
    )?)
}

impl LiveLoop {
    pub fn spawn(executor: Executor, cfg: &LiveConfig) -> Self {
        let (tx, rx) = sync_channel(cfg.command_queue.max(1));
        let (snap_tx, snap_rx) = watch::channel(None);
        let stop = Arc::new(AtomicBool::new(false));
        let started = Instant::now();
        let wall_period = Duration::from_secs_f64(executor.camera_period_s() / cfg.speedup.max(1e-6));
        let flag = stop.clone();
        let thread = std::thread::Builder::new()
            .name("cardioscope-loop".into())
            .spawn(move || run(executor, rx, snap_tx, flag, started, wall_period))
            .expect("spawn loop thread");
        Self {
            commands: tx,
            snapshots: snap_rx,
            stop,
            thread: Some(thread),
            started,
        }
    }

    /// Milliseconds since the loop started.
    pub fn elapsed_ms(&self) -> u64 {
        self.started.elapsed().as_millis() as u64
    }

    /// Queues a command for the next tick; the receiver resolves once it
    /// has been applied.
    pub fn submit(&self, command: ControlCommand) -> Result<oneshot::Receiver<CommandOutcome>, LiveError> {
        let (reply, rx) = oneshot::channel();
        let req = CommandRequest {
            command,
            received_ms: self.elapsed_ms(),
            reply,
        };
        match self.commands.try_send(req) {
            Ok(()) => Ok(rx),
            Err(TrySendError::Full(_)) => Err(LiveError::QueueFull),
            Err(TrySendError::Disconnected(_)) => Err(LiveError::Stopped),
        }
    }

    pub fn subscribe(&self) -> watch::Receiver<Option<Arc<Snapshot>>> {
        self.snapshots.clone()
    }

    pub fn latest(&self) -> Option<Arc<Snapshot>> {
        self.snapshots.borrow().clone()
    }

    pub fn is_running(&self) -> bool {
        self.thread.as_ref().is_some_and(|t| !t.is_finished())
    }

    /// Stops the loop and returns its exit status.
    pub fn shutdown(mut self) -> Result<(), ControlError> {
        self.stop_thread()
    }

    fn stop_thread(&mut self) -> Result<(), ControlError> {
        self.stop.store(true, Ordering::Relaxed);
        match self.thread.take() {
            Some(t) => t.join().unwrap_or(Ok(())),
            None => Ok(()),
        }
    }
}

impl Drop for LiveLoop {
    fn drop(&mut self) {
        let _ = self.stop_thread();
    }
}

fn run(
    mut executor: Executor,
    rx: Receiver<CommandRequest>,
    snapshots: watch::Sender<Option<Arc<Snapshot>>>,
    stop: Arc<AtomicBool>,
    started: Instant,
    wall_period: Duration,
) -> Result<(), ControlError> {
    let mut tick = 0u64;
    while !stop.load(Ordering::Relaxed) {
        let mut requests = Vec::new();
        loop {
            match rx.try_recv() {
                Ok(r) => requests.push(r),
                Err(TryRecvError::Empty) => break,
                // Every handle is gone; nothing can command us any more.
                Err(TryRecvError::Disconnected) => return Ok(()),
            }
        }
        requests.sort_by_key(|r| r.received_ms);
        let inbox = requests
            .iter()
            .map(|r| TimedCommand {
                time_s: r.received_ms as f64 / 1000.0,
                command: r.command,
            })
            .collect();
        let outcomes = executor.drain(inbox);
        for (req, outcome) in requests.into_iter().zip(outcomes) {
            let _ = req.reply.send(outcome);
        }

        let record = executor.tick()?;
        let frame = executor
            .last_frame()
            .cloned()
            .unwrap_or_else(|| Frame::filled([0, 0, 0]));
        snapshots.send_replace(Some(Arc::new(Snapshot {
            tick,
            record,
            mode: executor.mode(),
            estop: executor.estopped(),
            saturated: executor.state().pump.saturated,
            frame,
            png: OnceLock::new(),
        })));
        tick += 1;
        if let Some(wait) = (started + wall_period.mul_f64(tick as f64)).checked_duration_since(Instant::now()) {
            std::thread::sleep(wait);
        }
    }
    Ok(())
}
