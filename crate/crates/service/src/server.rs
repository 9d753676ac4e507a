//! WebSocket front end.
//!
//! Each connection gets the `hello` handshake, then every broadcast frame
//! plus acks and errors for its own commands. Text that is not JSON, and
//! binary messages, close the connection.

use std::net::SocketAddr;
use std::sync::atomic::Ordering;
use std::sync::mpsc;

use axum::extract::ws::{Message, Utf8Bytes, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::IntoResponse;
use axum::routing::get;
use axum::Router;
use futures_util::{SinkExt, StreamExt};
use thiserror::Error;
use tokio::net::TcpListener;
use tokio::sync::{broadcast, mpsc as tmpsc, oneshot};
use tracing::{debug, info};

use crate::config::ServiceConfig;
use crate::engine::{spawn_engine, EngineRequest};
use crate::protocol::{decode_client, encode_server, ServerMessage};

#[derive(Debug, Error)]
pub enum ServeError {
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: SocketAddr, source: std::io::Error },
    #[error("cannot start scene: {0}")]
    Scene(String),
    #[error("server failed: {0}")]
    Io(#[from] std::io::Error),
}

/// How a running server ended.
#[derive(Debug, Clone, PartialEq)]
pub enum ServeOutcome {
    Shutdown,
    Halted(String),
}

#[derive(Clone)]
struct AppState {
    commands: mpsc::Sender<EngineRequest>,
    frames: broadcast::Sender<Utf8Bytes>,
    hello: Utf8Bytes,
}

pub struct RunningServer {
    pub addr: SocketAddr,
    stop: Option<oneshot::Sender<()>>,
    task: tokio::task::JoinHandle<Result<ServeOutcome, ServeError>>,
}

impl RunningServer {
    /// Detaches the stop trigger; sending on it shuts the server down.
    pub fn take_stop(&mut self) -> Option<oneshot::Sender<()>> {
        self.stop.take()
    }

    /// Waits until the server stops by halt or through the stop trigger.
    pub async fn wait(self) -> Result<ServeOutcome, ServeError> {
        let RunningServer { stop, task, .. } = self;
        let outcome = task.await;
        drop(stop);
        outcome.map_err(|e| ServeError::Io(std::io::Error::other(e)))?
    }

    pub async fn shutdown(mut self) -> Result<ServeOutcome, ServeError> {
        if let Some(stop) = self.stop.take() {
            let _ = stop.send(());
        }
        self.task.await.map_err(|e| ServeError::Io(std::io::Error::other(e)))?
    }
}

/// Binds the listener, starts the engine and serves `/ws` in the background.
pub async fn start(config: &ServiceConfig) -> Result<RunningServer, ServeError> {
    let addr = config.listen_addr();
    let listener = TcpListener::bind(addr).await.map_err(|source| ServeError::Bind { addr, source })?;
    let addr = listener.local_addr()?;

    let (halt_tx, halt_rx) = oneshot::channel();
    let engine = spawn_engine(config, halt_tx).map_err(|e| ServeError::Scene(e.to_string()))?;
    let hello = ServerMessage::hello(config.dt, config.j_max, config.theta_d, config.frame_rate);
    let hello = encode_server(&hello).map_err(|e| ServeError::Scene(e.to_string()))?;
    let stop_engine = engine.stop.clone();
    let engine_thread = engine.thread;
    let state = AppState {
        commands: engine.commands,
        frames: engine.frames,
        hello: hello.into(),
    };
    let app = Router::new().route("/ws", get(upgrade)).with_state(state);

    let (stop_tx, stop_rx) = oneshot::channel::<()>();
    let task = tokio::spawn(async move {
        let (outcome_tx, outcome_rx) = oneshot::channel();
        let signal = async move {
            let outcome = tokio::select! {
                _ = stop_rx => ServeOutcome::Shutdown,
                halted = halt_rx => match halted {
                    Ok(diagnostic) => ServeOutcome::Halted(diagnostic),
                    Err(_) => ServeOutcome::Shutdown,
                },
            };
            stop_engine.store(true, Ordering::Relaxed);
            let _ = outcome_tx.send(outcome);
        };
        axum::serve(listener, app).with_graceful_shutdown(signal).await?;
        let _ = tokio::task::spawn_blocking(move || engine_thread.join()).await;
        Ok(outcome_rx.await.unwrap_or(ServeOutcome::Shutdown))
    });
    info!("listening on ws://{addr}/ws");
    Ok(RunningServer {
        addr,
        stop: Some(stop_tx),
        task,
    })
}

async fn upgrade(ws: WebSocketUpgrade, State(state): State<AppState>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| client_session(socket, state))
}

async fn client_session(socket: WebSocket, state: AppState) {
    let (mut sink, mut stream) = socket.split();
    if sink.send(Message::Text(state.hello.clone())).await.is_err() {
        return;
    }
    let mut frames = state.frames.subscribe();
    let (reply_tx, mut replies) = tmpsc::unbounded_channel::<Utf8Bytes>();

    let writer = tokio::spawn(async move {
        loop {
            let text = tokio::select! {
                frame = frames.recv() => match frame {
                    Ok(text) => text,
                    Err(broadcast::error::RecvError::Lagged(n)) => {
                        debug!("client skipped {n} frames");
                        continue;
                    }
                    Err(broadcast::error::RecvError::Closed) => break,
                },
                reply = replies.recv() => match reply {
                    Some(text) => text,
                    None => break,
                },
            };
            if sink.send(Message::Text(text)).await.is_err() {
                break;
            }
        }
        let _ = sink.close().await;
    });

    while let Some(Ok(msg)) = stream.next().await {
        match msg {
            Message::Text(text) => match decode_client(text.as_str()) {
                Ok(message) => {
                    let req = EngineRequest {
                        message,
                        reply: reply_tx.clone(),
                    };
                    if state.commands.send(req).is_err() {
                        break;
                    }
                }
                Err((_, err)) if err.syntax => {
                    debug!("closing client after malformed input: {err}");
                    break;
                }
                Err((tag, err)) => {
                    let reply = ServerMessage::Error { tag, message: err.to_string() };
                    if let Ok(text) = encode_server(&reply) {
                        let _ = reply_tx.send(text.into());
                    }
                }
            },
            Message::Binary(_) => break,
            Message::Close(_) => break,
            Message::Ping(_) | Message::Pong(_) => {}
        }
    }
    drop(reply_tx);
    writer.abort();
}
