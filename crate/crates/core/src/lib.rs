//! Exact density-matrix simulation of up to three qubits whose pairwise
//! Heisenberg exchange is switched on by spatial proximity.
//!
//! The crate is layered bottom-up: [`linalg`] and [`state`] provide the
//! numerical substrate, [`gates`], [`exchange`], [`measurement`] and
//! [`metrics`] implement the physics, and [`scene`] / [`scenario`] wire it
//! into a deterministic tick loop driven by commands.

pub mod error;
pub mod exchange;
pub mod gates;
pub mod linalg;
pub mod measurement;
pub mod metrics;
pub mod scenario;
pub mod scene;
pub mod state;

pub use error::{Result, SimError};
pub use exchange::{coupling_strength, exchange_unitary, CouplingParams, PairCoupling};
pub use gates::{Gate, GateSpec};
pub use linalg::{expm, is_unitary, CMatrix, Ket, C64};
pub use measurement::MeasurementOutcome;
pub use metrics::{build_report, pairwise_entanglement, renyi2, EntanglementReport};
pub use scenario::{run_scenario, ScenarioError, ScenarioRun, ScenarioScript, ScriptError, TimeSeries};
pub use scene::{Command, CommandStatus, Event, EventKind, PairState, QubitEntity, QubitSpawn, Scene, SceneConfig};
pub use state::{BlochAngles, BlochVector, DensityMatrix, PureState};
