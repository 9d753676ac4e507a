//! The interactive core: qubit entities in space, one global density
//! matrix, and a fixed-step tick loop that turns proximity into exchange.
//!
//! A [`Scene`] has exactly one owner. Commands and ticks mutate it in call
//! order, and every change is recorded in an append-only event log that the
//! owner drains.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Result, SimError};
use crate::exchange::{coupling_strength, evolve_scene_step, CouplingParams, PairCoupling};
use crate::gates::{apply_gate, Gate, GateSpec};
use crate::measurement::{measure_collapse, MeasurementOutcome};
use crate::metrics::{build_report, EntanglementReport};
use crate::state::{density_from_state, state_from_angles, validate_density, BlochAngles, DensityMatrix, MAX_QUBITS};

/// Simulated seconds per tick unless configured otherwise.
pub const DEFAULT_DT: f64 = 1.0 / 240.0;

/// Validity tolerance checked after every state change.
pub const STATE_TOL: f64 = 1e-7;

/// A coupled pair is shown as entangled once `S̃ᵢⱼ` exceeds this.
pub const ACTIVE_S_TILDE: f64 = 1e-6;

pub type Position = [f64; 3];

fn distance(a: &Position, b: &Position) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn check_position(p: &Position) -> Result<()> {
    if p.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(contract(format!("position {p:?} is not finite")))
    }
}

/// Display-only proximity cue: a Gaussian in `Δr` with `σ = Θ_d/4`, cut to
/// zero at `Δr ≥ Θ_d`.
pub fn overlap_indicator(delta_r: f64, theta_d: f64) -> f64 {
    if delta_r >= theta_d {
        return 0.0;
    }
    let sigma = theta_d / 4.0;
    (-delta_r * delta_r / (2.0 * sigma * sigma)).exp()
}

/// How to create one qubit: its initial pure state and where it sits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitSpawn {
    pub theta: f64,
    pub phi: f64,
    pub position: Position,
}

impl QubitSpawn {
    pub fn new(angles: BlochAngles, position: Position) -> Self {
        Self {
            theta: angles.theta,
            phi: angles.phi,
            position,
        }
    }

    pub fn angles(&self) -> BlochAngles {
        BlochAngles {
            theta: self.theta,
            phi: self.phi,
        }
    }

    fn validate(&self) -> Result<()> {
        self.angles().validate()?;
        check_position(&self.position)
    }

    fn density(&self) -> Result<DensityMatrix> {
        Ok(density_from_state(&state_from_angles(self.angles())?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitEntity {
    pub id: usize,
    pub position: Position,
    pub spawn_state: BlochAngles,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    pub coupling: CouplingParams,
    pub dt: f64,
    pub seed: u64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            coupling: CouplingParams::default(),
            dt: DEFAULT_DT,
            seed: 0,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        self.coupling.validate()?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(contract(format!("dt must be positive, got {}", self.dt)));
        }
        Ok(())
    }
}

/// Geometry and entanglement of one qubit pair (`i < j`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairState {
    pub i: usize,
    pub j: usize,
    pub delta_r: f64,
    pub j_strength: f64,
    pub s_tilde: f64,
    pub overlap: f64,
    /// Inside the cutoff distance, so exchange is switched on.
    pub coupled: bool,
    /// Coupled and measurably entangled.
    pub active: bool,
}

/// Inbound scene action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Command {
    MoveQubit { id: usize, position: Position },
    ApplyGate { gate: Gate, targets: Vec<usize> },
    Measure { qubit: usize },
    Freeze,
    Unfreeze,
    /// Rebuild from `qubits`, or from the current spawn list when absent.
    Reset {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        qubits: Option<Vec<QubitSpawn>>,
    },
    AddQubit { theta: f64, phi: f64, position: Position },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CommandStatus {
    Applied,
    Rejected { reason: String },
}

impl CommandStatus {
    pub fn is_applied(&self) -> bool {
        matches!(self, CommandStatus::Applied)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    /// One engine step; `evolved` is false while frozen.
    Tick { evolved: bool },
    Command { command: Command, #[serde(flatten)] status: CommandStatus },
    Measurement { outcome: MeasurementOutcome },
    EntangleOn { i: usize, j: usize, delta_r: f64, s_tilde: f64 },
    EntangleOff { i: usize, j: usize, delta_r: f64, s_tilde: f64 },
    /// The measurement RNG was (re)seeded.
    Seeded { seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub seq: u64,
    pub sim_time: f64,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone)]
pub struct Scene {
    config: SceneConfig,
    spawns: Vec<QubitSpawn>,
    qubits: Vec<QubitEntity>,
    rho: Option<DensityMatrix>,
    evolved_ticks: u64,
    frozen: bool,
    rng: ChaCha8Rng,
    report: EntanglementReport,
    pairs: Vec<PairState>,
    events: Vec<Event>,
    last_event: Option<Event>,
    next_seq: u64,
}

impl Scene {
    pub fn new(config: SceneConfig, spawns: Vec<QubitSpawn>) -> Result<Self> {
        config.validate()?;
        let mut scene = Scene {
            config,
            spawns: Vec::new(),
            qubits: Vec::new(),
            rho: None,
            evolved_ticks: 0,
            frozen: false,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            report: empty_report(),
            pairs: Vec::new(),
            events: Vec::new(),
            last_event: None,
            next_seq: 0,
        };
        scene.rebuild(spawns)?;
        scene.push_event(EventKind::Seeded { seed: config.seed });
        Ok(scene)
    }

    pub fn config(&self) -> &SceneConfig {
        &self.config
    }

    pub fn dt(&self) -> f64 {
        self.config.dt
    }

    pub fn n_qubits(&self) -> usize {
        self.qubits.len()
    }

    pub fn qubits(&self) -> &[QubitEntity] {
        &self.qubits
    }

    pub fn spawns(&self) -> &[QubitSpawn] {
        &self.spawns
    }

    pub fn rho(&self) -> Option<&DensityMatrix> {
        self.rho.as_ref()
    }

    pub fn report(&self) -> &EntanglementReport {
        &self.report
    }

    pub fn pairs(&self) -> &[PairState] {
        &self.pairs
    }

    pub fn pair(&self, i: usize, j: usize) -> Option<&PairState> {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        self.pairs.iter().find(|p| p.i == i && p.j == j)
    }

    pub fn sim_time(&self) -> f64 {
        self.evolved_ticks as f64 * self.config.dt
    }

    pub fn evolved_ticks(&self) -> u64 {
        self.evolved_ticks
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn last_event(&self) -> Option<&Event> {
        self.last_event.as_ref()
    }

    /// Events recorded so far; [`Scene::drain_events`] empties the buffer.
    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn drain_events(&mut self) -> Vec<Event> {
        std::mem::take(&mut self.events)
    }

    pub fn overlap_indicator(&self, i: usize, j: usize) -> Result<f64> {
        let n = self.n_qubits();
        if i == j || i >= n || j >= n {
            return Err(contract(format!("invalid pair ({i}, {j}) for {n} qubits")));
        }
        let dr = distance(&self.qubits[i].position, &self.qubits[j].position);
        Ok(overlap_indicator(dr, self.config.coupling.theta_d))
    }

    /// Advances the scene by one `dt`.
    ///
    /// Pair distances set each coupling, coupled pairs evolve in ascending
    /// order, and the report and crossing events are refreshed. A frozen
    /// scene keeps its state and clock but still tracks geometry.
    pub fn tick(&mut self) -> Result<()> {
        self.update_geometry();
        let evolved = !self.frozen;
        if evolved {
            let active: Vec<PairCoupling> = self
                .pairs
                .iter()
                .filter(|p| p.j_strength > 0.0)
                .map(|p| PairCoupling {
                    i: p.i,
                    j: p.j,
                    j_strength: p.j_strength,
                    delta_r: p.delta_r,
                })
                .collect();
            if let (Some(rho), false) = (&self.rho, active.is_empty()) {
                let next = evolve_scene_step(rho, &active, self.config.dt)
                    .map_err(|e| self.halt(format!("evolution failed: {e}")))?;
                self.rho = Some(next);
            }
            self.evolved_ticks += 1;
            self.check_state()?;
        }
        self.refresh_report()?;
        self.update_flags();
        self.push_event(EventKind::Tick { evolved });
        Ok(())
    }

    /// Applies one command.
    ///
    /// Invalid commands are logged as rejected and leave the scene untouched;
    /// only numeric failures surface as `Err`.
    pub fn apply_command(&mut self, cmd: Command) -> Result<CommandStatus> {
        let status = match self.try_command(&cmd) {
            Ok(Some(outcome)) => {
                self.log_command(cmd, CommandStatus::Applied);
                self.push_event(EventKind::Measurement { outcome });
                CommandStatus::Applied
            }
            Ok(None) => {
                self.log_command(cmd, CommandStatus::Applied);
                CommandStatus::Applied
            }
            Err(SimError::Contract(reason)) | Err(SimError::UnknownGate(reason)) => {
                let status = CommandStatus::Rejected { reason };
                self.log_command(cmd, status.clone());
                return Ok(status);
            }
            Err(e) => return Err(e),
        };
        self.update_geometry();
        self.refresh_report()?;
        self.update_flags();
        Ok(status)
    }

    fn log_command(&mut self, command: Command, status: CommandStatus) {
        self.push_event(EventKind::Command { command, status });
    }

    fn try_command(&mut self, cmd: &Command) -> Result<Option<MeasurementOutcome>> {
        match cmd {
            Command::MoveQubit { id, position } => {
                check_position(position)?;
                let q = self
                    .qubits
                    .get_mut(*id)
                    .ok_or_else(|| contract(format!("no qubit with id {id}")))?;
                q.position = *position;
                Ok(None)
            }
            Command::ApplyGate { gate, targets } => {
                self.ensure_running("apply a gate")?;
                let spec = GateSpec::new(*gate, targets.clone());
                let rho = self.rho.as_ref().ok_or_else(|| contract("scene has no qubits"))?;
                spec.validate(rho.n_qubits())?;
                let next = apply_gate(rho, &spec).map_err(|e| self.halt(format!("gate failed: {e}")))?;
                self.rho = Some(next);
                self.check_state()?;
                Ok(None)
            }
            Command::Measure { qubit } => {
                let rho = self.rho.as_ref().ok_or_else(|| contract("scene has no qubits"))?;
                if *qubit >= rho.n_qubits() {
                    return Err(contract(format!("no qubit with id {qubit}")));
                }
                let (outcome, post) = measure_collapse(rho, *qubit, &mut self.rng)
                    .map_err(|e| self.halt(format!("measurement failed: {e}")))?;
                self.rho = Some(post);
                self.check_state()?;
                Ok(Some(outcome))
            }
            Command::Freeze => {
                self.frozen = true;
                Ok(None)
            }
            Command::Unfreeze => {
                self.frozen = false;
                Ok(None)
            }
            Command::Reset { qubits } => {
                self.ensure_running("reset")?;
                let spawns = qubits.clone().unwrap_or_else(|| self.spawns.clone());
                validate_spawns(&spawns)?;
                let seed = self.rng.next_u64();
                self.rebuild(spawns)?;
                self.rng = ChaCha8Rng::seed_from_u64(seed);
                self.push_event(EventKind::Seeded { seed });
                Ok(None)
            }
            Command::AddQubit { theta, phi, position } => {
                self.ensure_running("add a qubit")?;
                if self.qubits.len() >= MAX_QUBITS {
                    return Err(contract(format!("scene already holds {MAX_QUBITS} qubits")));
                }
                let spawn = QubitSpawn {
                    theta: *theta,
                    phi: *phi,
                    position: *position,
                };
                spawn.validate()?;
                let single = spawn.density()?;
                let next = match &self.rho {
                    Some(rho) => rho.tensor(&single)?,
                    None => single,
                };
                self.qubits.push(QubitEntity {
                    id: self.qubits.len(),
                    position: spawn.position,
                    spawn_state: spawn.angles(),
                });
                self.rho = Some(next);
                Ok(None)
            }
        }
    }

    fn ensure_running(&self, what: &str) -> Result<()> {
        if self.frozen {
            Err(contract(format!("cannot {what} while frozen")))
        } else {
            Ok(())
        }
    }

    fn rebuild(&mut self, spawns: Vec<QubitSpawn>) -> Result<()> {
        validate_spawns(&spawns)?;
        let singles = spawns.iter().map(QubitSpawn::density).collect::<Result<Vec<_>>>()?;
        self.rho = if singles.is_empty() {
            None
        } else {
            Some(DensityMatrix::product(&singles)?)
        };
        self.qubits = spawns
            .iter()
            .enumerate()
            .map(|(id, s)| QubitEntity {
                id,
                position: s.position,
                spawn_state: s.angles(),
            })
            .collect();
        self.spawns = spawns;
        self.update_geometry();
        self.refresh_report()?;
        self.update_flags();
        Ok(())
    }

    /// Recomputes distances, couplings and overlap for every pair.
    fn update_geometry(&mut self) {
        let params = self.config.coupling;
        let n = self.qubits.len();
        let mut pairs = Vec::with_capacity(n * (n.saturating_sub(1)) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                let delta_r = distance(&self.qubits[i].position, &self.qubits[j].position);
                let previous = self.pairs.iter().find(|p| p.i == i && p.j == j);
                pairs.push(PairState {
                    i,
                    j,
                    delta_r,
                    j_strength: coupling_strength(delta_r, &params),
                    s_tilde: previous.map_or(0.0, |p| p.s_tilde),
                    overlap: overlap_indicator(delta_r, params.theta_d),
                    coupled: previous.is_some_and(|p| p.coupled),
                    active: previous.is_some_and(|p| p.active),
                });
            }
        }
        // Pairs whose qubits vanished (reset to fewer qubits) decouple.
        let dropped: Vec<EventKind> = self
            .pairs
            .iter()
            .filter(|p| p.coupled && p.j >= n)
            .map(|p| EventKind::EntangleOff { i: p.i, j: p.j, delta_r: p.delta_r, s_tilde: p.s_tilde })
            .collect();
        self.pairs = pairs;
        for kind in dropped {
            self.push_event(kind);
        }
    }

    fn refresh_report(&mut self) -> Result<()> {
        self.report = match &self.rho {
            Some(rho) => build_report(rho).map_err(|e| self.halt(format!("metrics failed: {e}")))?,
            None => empty_report(),
        };
        for p in &mut self.pairs {
            p.s_tilde = self.report.s_tilde(p.i, p.j);
        }
        Ok(())
    }

    /// Flips coupling flags at threshold crossings and logs the transitions.
    fn update_flags(&mut self) {
        let theta_d = self.config.coupling.theta_d;
        let mut crossings = Vec::new();
        for p in &mut self.pairs {
            let coupled = p.delta_r < theta_d;
            if coupled != p.coupled {
                crossings.push(if coupled {
                    EventKind::EntangleOn { i: p.i, j: p.j, delta_r: p.delta_r, s_tilde: p.s_tilde }
                } else {
                    EventKind::EntangleOff { i: p.i, j: p.j, delta_r: p.delta_r, s_tilde: p.s_tilde }
                });
                p.coupled = coupled;
            }
            p.active = p.coupled && p.s_tilde > ACTIVE_S_TILDE;
        }
        for kind in crossings {
            self.push_event(kind);
        }
    }

    fn check_state(&self) -> Result<()> {
        if let Some(rho) = &self.rho {
            let report = validate_density(rho, STATE_TOL);
            if !report.passed() {
                return Err(self.halt(format!("density matrix invalid: {}", report.describe())));
            }
        }
        Ok(())
    }

    fn halt(&self, diagnostic: String) -> SimError {
        SimError::Halt {
            sim_time: self.sim_time(),
            diagnostic,
        }
    }

    fn push_event(&mut self, kind: EventKind) {
        let event = Event {
            seq: self.next_seq,
            sim_time: self.sim_time(),
            kind,
        };
        self.next_seq += 1;
        self.last_event = Some(event.clone());
        self.events.push(event);
    }
}

fn validate_spawns(spawns: &[QubitSpawn]) -> Result<()> {
    if spawns.len() > MAX_QUBITS {
        return Err(contract(format!(
            "{} qubits requested, at most {MAX_QUBITS} supported",
            spawns.len()
        )));
    }
    spawns.iter().try_for_each(QubitSpawn::validate)
}

fn empty_report() -> EntanglementReport {
    EntanglementReport {
        per_qubit_entropy: Vec::new(),
        per_qubit_bloch: Vec::new(),
        per_qubit_p0: Vec::new(),
        pair_parameters: Default::default(),
    }
}
