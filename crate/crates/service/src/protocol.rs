//! Wire protocol: JSON text messages over a WebSocket.
//!
//! Clients send [`ClientMessage`] envelopes. The server sends
//! [`ServerMessage`] values tagged by `"type"`: a `hello` handshake once per
//! connection, then `frame` broadcasts, `ack` replies and `error` replies.
//! Unknown fields are ignored when decoding; unknown command or message
//! types are errors.

use qsandbox_core::state::MAX_QUBITS;
use qsandbox_core::{Command, CommandStatus, Event, Scene};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CodecError {
    #[error("refusing to encode non-finite value in {0}")]
    NonFinite(String),
    #[error("encode failed: {0}")]
    Encode(String),
}

/// Decode failure with the 1-based position in the input.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct DecodeError {
    pub line: usize,
    pub column: usize,
    pub message: String,
    /// The input was not JSON at all, as opposed to JSON of the wrong shape.
    pub syntax: bool,
}

impl From<serde_json::Error> for DecodeError {
    fn from(e: serde_json::Error) -> Self {
        Self {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
            syntax: e.is_syntax() || e.is_eof(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QubitFrame {
    pub id: usize,
    pub position: [f64; 3],
    pub u: f64,
    pub v: f64,
    pub w: f64,
    pub radius: f64,
    pub entropy: f64,
    pub p0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairFrame {
    pub i: usize,
    pub j: usize,
    pub delta_r: f64,
    pub j_strength: f64,
    pub s_tilde: f64,
    pub overlap: f64,
    pub active: bool,
}

/// Snapshot of the scene as broadcast to viewers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub sim_time: f64,
    pub frozen: bool,
    pub qubits: Vec<QubitFrame>,
    pub pairs: Vec<PairFrame>,
    /// Most recent event other than a plain tick.
    pub last_event: Option<Event>,
}

impl Frame {
    pub fn from_scene(scene: &Scene, last_event: Option<Event>) -> Self {
        let report = scene.report();
        let qubits = scene
            .qubits()
            .iter()
            .enumerate()
            .map(|(k, q)| {
                let b = report.per_qubit_bloch[k];
                QubitFrame {
                    id: q.id,
                    position: q.position,
                    u: b.u,
                    v: b.v,
                    w: b.w,
                    radius: b.radius(),
                    entropy: report.per_qubit_entropy[k],
                    p0: report.per_qubit_p0[k],
                }
            })
            .collect();
        let pairs = scene
            .pairs()
            .iter()
            .map(|p| PairFrame {
                i: p.i,
                j: p.j,
                delta_r: p.delta_r,
                j_strength: p.j_strength,
                s_tilde: p.s_tilde,
                overlap: p.overlap,
                active: p.active,
            })
            .collect();
        Self {
            sim_time: scene.sim_time(),
            frozen: scene.is_frozen(),
            qubits,
            pairs,
            last_event,
        }
    }

    /// Name of the first non-finite numeric field, if any.
    pub fn first_non_finite(&self) -> Option<String> {
        if !self.sim_time.is_finite() {
            return Some("sim_time".into());
        }
        for q in &self.qubits {
            let values = [
                ("position", q.position.iter().all(|x| x.is_finite())),
                ("u", q.u.is_finite()),
                ("v", q.v.is_finite()),
                ("w", q.w.is_finite()),
                ("radius", q.radius.is_finite()),
                ("entropy", q.entropy.is_finite()),
                ("p0", q.p0.is_finite()),
            ];
            if let Some((name, _)) = values.iter().find(|(_, ok)| !ok) {
                return Some(format!("qubits[{}].{name}", q.id));
            }
        }
        for p in &self.pairs {
            let values = [
                ("delta_r", p.delta_r),
                ("j_strength", p.j_strength),
                ("s_tilde", p.s_tilde),
                ("overlap", p.overlap),
            ];
            if let Some((name, _)) = values.iter().find(|(_, x)| !x.is_finite()) {
                return Some(format!("pairs[{}{}].{name}", p.i, p.j));
            }
        }
        if let Some(e) = &self.last_event {
            if !e.sim_time.is_finite() {
                return Some("last_event.sim_time".into());
            }
        }
        None
    }
}

/// Inbound envelope around a scene command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientMessage {
    /// Echoed back on the matching ack or error.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<String>,
    /// Client wall-clock time, informational only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub issued_at: Option<f64>,
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Hello {
        protocol: u32,
        /// Maximum number of qubits a scene can hold.
        capacity: usize,
        dt: f64,
        j_max: f64,
        theta_d: f64,
        frame_rate: f64,
    },
    Frame(Frame),
    Ack {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tag: Option<String>,
        sim_time: f64,
        #[serde(flatten)]
        status: CommandStatus,
    },
    Error {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tag: Option<String>,
        message: String,
    },
}

impl ServerMessage {
    pub fn hello(dt: f64, j_max: f64, theta_d: f64, frame_rate: f64) -> Self {
        ServerMessage::Hello {
            protocol: PROTOCOL_VERSION,
            capacity: MAX_QUBITS,
            dt,
            j_max,
            theta_d,
            frame_rate,
        }
    }

    fn first_non_finite(&self) -> Option<String> {
        match self {
            ServerMessage::Frame(f) => f.first_non_finite(),
            ServerMessage::Hello { dt, j_max, theta_d, frame_rate, .. } => [dt, j_max, theta_d, frame_rate]
                .iter()
                .any(|x| !x.is_finite())
                .then(|| "hello".to_string()),
            ServerMessage::Ack { sim_time, .. } => (!sim_time.is_finite()).then(|| "ack.sim_time".to_string()),
            ServerMessage::Error { .. } => None,
        }
    }
}

pub fn encode_server(msg: &ServerMessage) -> Result<String, CodecError> {
    if let Some(field) = msg.first_non_finite() {
        return Err(CodecError::NonFinite(field));
    }
    serde_json::to_string(msg).map_err(|e| CodecError::Encode(e.to_string()))
}

pub fn decode_server(text: &str) -> Result<ServerMessage, DecodeError> {
    Ok(serde_json::from_str(text)?)
}

pub fn encode_client(msg: &ClientMessage) -> Result<String, CodecError> {
    serde_json::to_string(msg).map_err(|e| CodecError::Encode(e.to_string()))
}

/// Decodes a client envelope.
///
/// On a shape error the tag is still recovered when the input is a JSON
/// object carrying a string `tag`.
pub fn decode_client(text: &str) -> Result<ClientMessage, (Option<String>, DecodeError)> {
    serde_json::from_str(text).map_err(|e| {
        let err = DecodeError::from(e);
        let tag = if err.syntax {
            None
        } else {
            serde_json::from_str::<serde_json::Value>(text)
                .ok()
                .and_then(|v| v.get("tag").and_then(|t| t.as_str()).map(str::to_owned))
        };
        (tag, err)
    })
}
