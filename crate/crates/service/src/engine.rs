//! Real-time engine thread that owns the scene.
//!
//! Commands arrive on one queue and are applied in arrival order. The scene
//! advances in fixed `dt` steps against a wall-clock accumulator, and frames
//! are encoded once and published on a broadcast channel.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, RecvTimeoutError};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use axum::extract::ws::Utf8Bytes;
use qsandbox_core::{Event, EventKind, Scene, SimError};
use tokio::sync::{broadcast, mpsc as tmpsc, oneshot};
use tracing::{debug, error, warn};

use crate::config::ServiceConfig;
use crate::protocol::{encode_server, ClientMessage, Frame, ServerMessage};

/// Ticks run at most this many times per loop before the backlog is dropped.
const MAX_CATCH_UP: u32 = 16;

pub struct EngineRequest {
    pub message: ClientMessage,
    /// Receives the encoded ack or error.
    pub reply: tmpsc::UnboundedSender<Utf8Bytes>,
}

pub struct EngineHandle {
    pub commands: mpsc::Sender<EngineRequest>,
    pub frames: broadcast::Sender<Utf8Bytes>,
    pub stop: Arc<AtomicBool>,
    pub thread: JoinHandle<()>,
}

/// Starts the engine thread.
///
/// `halted` fires with a diagnostic if the scene stops on a numeric failure.
/// The thread exits once `stop` is set or every command sender is dropped.
pub fn spawn_engine(config: &ServiceConfig, halted: oneshot::Sender<String>) -> Result<EngineHandle, SimError> {
    let scene = Scene::new(config.scene_config(), config.qubits.clone())?;
    let (cmd_tx, cmd_rx) = mpsc::channel();
    let (frame_tx, _) = broadcast::channel(64);
    let frames = frame_tx.clone();
    let frame_interval = Duration::from_secs_f64(1.0 / config.frame_rate);
    let stop = Arc::new(AtomicBool::new(false));
    let stop_flag = stop.clone();
    let thread = thread::Builder::new()
        .name("qsandbox-engine".into())
        .spawn(move || {
            let mut engine = Engine {
                scene,
                frames,
                last_event: None,
            };
            if let Err(diagnostic) = engine.run(cmd_rx, frame_interval, &stop_flag) {
                error!("engine halted: {diagnostic}");
                engine.publish(&ServerMessage::Error { tag: None, message: diagnostic.clone() });
                let _ = halted.send(diagnostic);
            }
        })
        .map_err(|e| SimError::Numeric(format!("cannot start engine thread: {e}")))?;
    Ok(EngineHandle {
        commands: cmd_tx,
        frames: frame_tx,
        stop,
        thread,
    })
}

struct Engine {
    scene: Scene,
    frames: broadcast::Sender<Utf8Bytes>,
    last_event: Option<Event>,
}

impl Engine {
    fn run(
        &mut self,
        commands: mpsc::Receiver<EngineRequest>,
        frame_interval: Duration,
        stop: &AtomicBool,
    ) -> Result<(), String> {
        let dt = Duration::from_secs_f64(self.scene.dt());
        let mut last = Instant::now();
        let mut backlog = Duration::ZERO;
        let mut next_frame = last;
        while !stop.load(Ordering::Relaxed) {
            let now = Instant::now();
            backlog += now - last;
            last = now;
            let mut steps = 0;
            while backlog >= dt {
                self.scene.tick().map_err(|e| e.to_string())?;
                backlog -= dt;
                steps += 1;
                if steps == MAX_CATCH_UP {
                    debug!("dropping {:?} of tick backlog", backlog);
                    backlog = Duration::ZERO;
                }
            }
            self.absorb_events();

            if now >= next_frame {
                self.publish_frame();
                next_frame += frame_interval;
                if next_frame < now {
                    next_frame = now + frame_interval;
                }
            }

            let wake = (last + dt.saturating_sub(backlog)).min(next_frame);
            match commands.recv_timeout(wake.saturating_duration_since(Instant::now())) {
                Ok(req) => {
                    self.handle(req)?;
                    while let Ok(req) = commands.try_recv() {
                        self.handle(req)?;
                    }
                }
                Err(RecvTimeoutError::Timeout) => {}
                Err(RecvTimeoutError::Disconnected) => return Ok(()),
            }
        }
        Ok(())
    }

    fn handle(&mut self, req: EngineRequest) -> Result<(), String> {
        let tag = req.message.tag.clone();
        let status = self.scene.apply_command(req.message.command).map_err(|e| e.to_string())?;
        self.absorb_events();
        let ack = ServerMessage::Ack {
            tag,
            sim_time: self.scene.sim_time(),
            status,
        };
        match encode_server(&ack) {
            Ok(text) => {
                let _ = req.reply.send(text.into());
            }
            Err(e) => warn!("cannot encode ack: {e}"),
        }
        Ok(())
    }

    fn absorb_events(&mut self) {
        if let Some(e) = self
            .scene
            .drain_events()
            .into_iter()
            .rev()
            .find(|e| !matches!(e.kind, EventKind::Tick { .. }))
        {
            self.last_event = Some(e);
        }
    }

    fn publish_frame(&self) {
        let frame = Frame::from_scene(&self.scene, self.last_event.clone());
        self.publish(&ServerMessage::Frame(frame));
    }

    fn publish(&self, msg: &ServerMessage) {
        match encode_server(msg) {
            // No receivers is not an error.
            Ok(text) => {
                let _ = self.frames.send(text.into());
            }
            Err(e) => warn!("dropping frame: {e}"),
        }
    }
}
