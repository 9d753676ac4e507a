//! Operational shell around `qsandbox-core`: configuration, the scenario
//! CLI, the frame codec and the live WebSocket service.

pub mod cli;
pub mod config;
pub mod engine;
pub mod protocol;
pub mod server;

pub use config::ServiceConfig;
pub use protocol::{ClientMessage, Frame, PairFrame, QubitFrame, ServerMessage};
