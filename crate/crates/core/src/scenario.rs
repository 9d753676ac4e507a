//! Scripted, deterministic scene runs.
//!
//! A script is line-oriented text. `#` starts a comment. Header lines are
//! `key: value` pairs, followed by qubit declarations and timed commands:
//!
//! ```text
//! seed: 42
//! dt: 1/240
//! j_max: 1
//! theta_d: 5
//! duration: 4*pi
//! qubit 0 pi 0 0 0 0          # id theta phi x y z
//! qubit 1 0 0 8 0 0
//! at 0.5 move 1 0 0 0
//! at 1 gate H 0
//! at 1 gate CNOT 0 1
//! at 2 measure 0
//! at 3 freeze
//! at 3.5 unfreeze
//! at 4 reset
//! ```
//!
//! Real values accept `pi` and products or quotients such as `3*pi/4` or
//! `1/240`. Header keys are `seed`, `dt`, `j_max`, `theta_d`, `duration`
//! and `ticks`. Without `duration` or `ticks` the run lasts until the last
//! command. Commands are ordered by time; equal times keep file order.
//!
//! The run clock advances by `dt` every step whether or not the scene is
//! frozen; command times refer to this clock. Before step `k` (clock
//! `k·dt`) every command due by then is applied, then the scene ticks and
//! one time-series row is recorded.
//!
//! Time-series columns, in order: `step`, `clock`, `sim_time`, `frozen`,
//! then per qubit `q{i}_p0`, `q{i}_u`, `q{i}_v`, `q{i}_w`, `q{i}_radius`,
//! `q{i}_s2`, then per pair `i < j` `pair{i}{j}_delta_r`, `pair{i}{j}_j`,
//! `pair{i}{j}_s_tilde`.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fmt;
use std::io::Write;

use thiserror::Error;

use crate::error::SimError;
use crate::exchange::CouplingParams;
use crate::gates::{Gate, GateSpec};
use crate::scene::{Command, Event, QubitSpawn, Scene, SceneConfig, DEFAULT_DT};
use crate::state::{BlochAngles, MAX_QUBITS};

/// Slack when comparing command times against the step clock, in units of dt.
const CLOCK_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: {message}")]
pub struct ScriptError {
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> ScriptError {
    ScriptError {
        line,
        message: message.into(),
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("script error: {0}")]
    Script(#[from] ScriptError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("output error: {0}")]
    Output(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimedCommand {
    pub at: f64,
    pub line: usize,
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioScript {
    pub seed: u64,
    pub dt: f64,
    pub coupling: CouplingParams,
    pub duration: Option<f64>,
    pub ticks: Option<u64>,
    pub qubits: Vec<QubitSpawn>,
    /// Sorted by time, stable in file order.
    pub commands: Vec<TimedCommand>,
}

impl ScenarioScript {
    pub fn parse(text: &str) -> Result<Self, ScriptError> {
        Parser::default().parse(text)
    }

    pub fn scene_config(&self) -> SceneConfig {
        SceneConfig {
            coupling: self.coupling,
            dt: self.dt,
            seed: self.seed,
        }
    }

    /// Number of steps the run executes.
    pub fn total_ticks(&self) -> u64 {
        if let Some(t) = self.ticks {
            return t;
        }
        let end = self
            .duration
            .unwrap_or_else(|| self.commands.last().map_or(0.0, |c| c.at));
        steps_covering(end, self.dt)
    }

    /// Re-checks invariants that depend on more than one line, e.g. after
    /// overriding `dt` or `seed`.
    pub fn validate(&self) -> Result<(), ScriptError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(err(0, format!("dt must be positive, got {}", self.dt)));
        }
        self.coupling.validate().map_err(|e| err(0, e.to_string()))?;
        if self.duration.is_some() || self.ticks.is_some() {
            let end = self.total_ticks() as f64 * self.dt;
            if let Some(late) = self.commands.iter().find(|c| c.at > end + CLOCK_SLACK * self.dt) {
                return Err(err(late.line, format!("command at {} is after the end of the run ({end})", late.at)));
            }
        }
        Ok(())
    }
}

fn steps_covering(end: f64, dt: f64) -> u64 {
    if end <= 0.0 {
        0
    } else {
        (end / dt - CLOCK_SLACK).ceil().max(0.0) as u64
    }
}

/// Evaluates `pi`, decimal numbers, and `*` / `/` chains of them.
pub fn parse_real(text: &str) -> Option<f64> {
    let text = text.trim();
    let (sign, body) = match text.strip_prefix('-') {
        Some(rest) => (-1.0, rest),
        None => (1.0, text),
    };
    let mut value = None;
    let mut op = '*';
    let mut start = 0;
    for (idx, ch) in body.char_indices().chain(std::iter::once((body.len(), '*'))) {
        if ch != '*' && ch != '/' {
            continue;
        }
        let atom = body[start..idx].trim();
        let x = match atom {
            "pi" | "PI" | "π" => PI,
            _ if atom.starts_with(['+', '-']) => return None,
            _ => atom.parse::<f64>().ok()?,
        };
        value = Some(match (value, op) {
            (None, _) => x,
            (Some(v), '*') => v * x,
            (Some(v), _) => v / x,
        });
        op = ch;
        start = idx + ch.len_utf8();
    }
    value.map(|v| sign * v).filter(|v| v.is_finite())
}

#[derive(Default)]
struct Parser {
    seen_keys: BTreeSet<String>,
    seed: Option<u64>,
    dt: Option<f64>,
    j_max: Option<f64>,
    theta_d: Option<f64>,
    duration: Option<f64>,
    ticks: Option<u64>,
    qubits: Vec<QubitSpawn>,
    commands: Vec<TimedCommand>,
}

impl Parser {
    fn parse(mut self, text: &str) -> Result<ScenarioScript, ScriptError> {
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let words: Vec<&str> = content.split_whitespace().collect();
            match words[0] {
                "qubit" => self.qubit(line, &words[1..])?,
                "at" => self.command(line, &words[1..])?,
                _ => self.header(line, content)?,
            }
        }

        if self.duration.is_some() && self.ticks.is_some() {
            return Err(err(0, "give either duration or ticks, not both"));
        }
        let dt = self.dt.unwrap_or(DEFAULT_DT);
        let defaults = CouplingParams::default();
        let coupling = CouplingParams {
            j_max: self.j_max.unwrap_or(defaults.j_max),
            theta_d: self.theta_d.unwrap_or(defaults.theta_d),
        };
        self.commands.sort_by(|a, b| a.at.total_cmp(&b.at));
        let script = ScenarioScript {
            seed: self.seed.unwrap_or(0),
            dt,
            coupling,
            duration: self.duration,
            ticks: self.ticks,
            qubits: self.qubits,
            commands: self.commands,
        };
        script.validate()?;
        Ok(script)
    }

    fn header(&mut self, line: usize, content: &str) -> Result<(), ScriptError> {
        let (key, value) = content
            .split_once(':')
            .ok_or_else(|| err(line, format!("unrecognised line `{content}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if !self.seen_keys.insert(key.to_string()) {
            return Err(err(line, format!("duplicate header key `{key}`")));
        }
        let positive = |what: &str| -> Result<f64, ScriptError> {
            match parse_real(value) {
                Some(v) if v > 0.0 => Ok(v),
                _ => Err(err(line, format!("{what} must be a positive number, got `{value}`"))),
            }
        };
        match key {
            "seed" => {
                self.seed = Some(
                    value
                        .parse()
                        .map_err(|_| err(line, format!("seed must be an unsigned 64-bit integer, got `{value}`")))?,
                )
            }
            "dt" => self.dt = Some(positive("dt")?),
            "j_max" => self.j_max = Some(positive("j_max")?),
            "theta_d" => self.theta_d = Some(positive("theta_d")?),
            "duration" => {
                let v = parse_real(value)
                    .filter(|v| *v >= 0.0)
                    .ok_or_else(|| err(line, format!("duration must be a non-negative number, got `{value}`")))?;
                self.duration = Some(v);
            }
            "ticks" => {
                self.ticks = Some(
                    value
                        .parse()
                        .map_err(|_| err(line, format!("ticks must be a non-negative integer, got `{value}`")))?,
                )
            }
            other => return Err(err(line, format!("unknown header key `{other}`"))),
        }
        Ok(())
    }

    fn qubit(&mut self, line: usize, args: &[&str]) -> Result<(), ScriptError> {
        if !self.commands.is_empty() {
            return Err(err(line, "qubit declarations must precede commands"));
        }
        let [id, theta, phi, x, y, z] = args else {
            return Err(err(line, "expected `qubit <id> <theta> <phi> <x> <y> <z>`"));
        };
        let id: usize = id.parse().map_err(|_| err(line, format!("bad qubit id `{id}`")))?;
        if id != self.qubits.len() {
            return Err(err(line, format!("qubit ids must be 0, 1, 2 in order; got {id}")));
        }
        if id >= MAX_QUBITS {
            return Err(err(line, format!("at most {MAX_QUBITS} qubits are supported")));
        }
        let theta = real(line, theta)?;
        let phi = real(line, phi)?;
        let angles = BlochAngles::new(theta, phi).map_err(|e| err(line, e.to_string()))?;
        let position = [real(line, x)?, real(line, y)?, real(line, z)?];
        self.qubits.push(QubitSpawn::new(angles, position));
        Ok(())
    }

    fn command(&mut self, line: usize, args: &[&str]) -> Result<(), ScriptError> {
        let (at, verb, rest) = match args {
            [at, verb, rest @ ..] => (real(line, at)?, *verb, rest),
            _ => return Err(err(line, "expected `at <time> <command> ...`")),
        };
        if at < 0.0 {
            return Err(err(line, format!("command time {at} is negative")));
        }
        let n = self.qubits.len();
        let qubit = |s: &str| -> Result<usize, ScriptError> {
            let id: usize = s.parse().map_err(|_| err(line, format!("bad qubit id `{s}`")))?;
            if id >= n {
                return Err(err(line, format!("no qubit with id {id}")));
            }
            Ok(id)
        };
        let command = match (verb, rest) {
            ("move", [id, x, y, z]) => Command::MoveQubit {
                id: qubit(id)?,
                position: [real(line, x)?, real(line, y)?, real(line, z)?],
            },
            ("move", _) => return Err(err(line, "expected `move <id> <x> <y> <z>`")),
            ("gate", [name, targets @ ..]) => {
                let gate: Gate = name.parse().map_err(|e: SimError| err(line, e.to_string()))?;
                let targets = targets.iter().map(|t| qubit(t)).collect::<Result<Vec<_>, _>>()?;
                GateSpec::new(gate, targets.clone())
                    .validate(n)
                    .map_err(|e| err(line, e.to_string()))?;
                Command::ApplyGate { gate, targets }
            }
            ("gate", []) => return Err(err(line, "expected `gate <name> <targets...>`")),
            ("measure", [id]) => Command::Measure { qubit: qubit(id)? },
            ("measure", _) => return Err(err(line, "expected `measure <id>`")),
            ("freeze", []) => Command::Freeze,
            ("unfreeze", []) => Command::Unfreeze,
            ("reset", []) => Command::Reset { qubits: None },
            ("freeze" | "unfreeze" | "reset", _) => {
                return Err(err(line, format!("`{verb}` takes no arguments")))
            }
            (other, _) => return Err(err(line, format!("unknown command `{other}`"))),
        };
        self.commands.push(TimedCommand { at, line, command });
        Ok(())
    }
}

fn real(line: usize, text: &str) -> Result<f64, ScriptError> {
    parse_real(text).ok_or_else(|| err(line, format!("bad number `{text}`")))
}

/// Per-step observables of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl TimeSeries {
    fn for_qubits(n: usize) -> Self {
        let mut columns: Vec<String> = ["step", "clock", "sim_time", "frozen"].map(String::from).to_vec();
        for q in 0..n {
            for field in ["p0", "u", "v", "w", "radius", "s2"] {
                columns.push(format!("q{q}_{field}"));
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                for field in ["delta_r", "j", "s_tilde"] {
                    columns.push(format!("pair{i}{j}_{field}"));
                }
            }
        }
        Self {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }

    fn record(&mut self, step: u64, clock: f64, scene: &Scene) {
        let report = scene.report();
        let mut row = vec![step as f64, clock, scene.sim_time(), if scene.is_frozen() { 1.0 } else { 0.0 }];
        for q in 0..scene.n_qubits() {
            let b = report.per_qubit_bloch[q];
            row.extend([report.per_qubit_p0[q], b.u, b.v, b.w, b.radius(), report.per_qubit_entropy[q]]);
        }
        for p in scene.pairs() {
            row.extend([p.delta_r, p.j_strength, p.s_tilde]);
        }
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), ScenarioError> {
        let mut w = csv::Writer::from_writer(out);
        let output = |e: csv::Error| ScenarioError::Output(e.to_string());
        w.write_record(&self.columns).map_err(output)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|x| x.to_string())).map_err(output)?;
        }
        w.flush().map_err(|e| ScenarioError::Output(e.to_string()))
    }
}

/// Writes events as one JSON object per line.
pub fn write_events<W: Write>(events: &[Event], mut out: W) -> Result<(), ScenarioError> {
    for e in events {
        let line = serde_json::to_string(e).map_err(|e| ScenarioError::Output(e.to_string()))?;
        writeln!(out, "{line}").map_err(|e| ScenarioError::Output(e.to_string()))?;
    }
    Ok(())
}

pub struct ScenarioRun {
    pub scene: Scene,
    pub events: Vec<Event>,
    pub series: TimeSeries,
}

impl fmt::Debug for ScenarioRun {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScenarioRun")
            .field("events", &self.events.len())
            .field("rows", &self.series.rows.len())
            .finish()
    }
}

pub fn run_scenario(script: &ScenarioScript) -> Result<ScenarioRun, ScenarioError> {
    script.validate()?;
    let mut scene = Scene::new(script.scene_config(), script.qubits.clone())?;
    let mut series = TimeSeries::for_qubits(scene.n_qubits());
    let mut events = scene.drain_events();
    let total = script.total_ticks();
    let dt = script.dt;
    let mut pending = script.commands.iter().peekable();

    let mut apply_due = |scene: &mut Scene, clock: f64| -> Result<(), SimError> {
        while let Some(cmd) = pending.next_if(|c| c.at <= clock + CLOCK_SLACK * dt) {
            scene.apply_command(cmd.command.clone())?;
        }
        Ok(())
    };

    for k in 0..total {
        apply_due(&mut scene, k as f64 * dt)?;
        scene.tick()?;
        series.record(k + 1, (k + 1) as f64 * dt, &scene);
        events.append(&mut scene.drain_events());
    }
    apply_due(&mut scene, total as f64 * dt)?;
    events.append(&mut scene.drain_events());

    Ok(ScenarioRun { scene, events, series })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn real_expressions() {
        assert_eq!(parse_real("2.5"), Some(2.5));
        assert_eq!(parse_real("pi"), Some(PI));
        assert_eq!(parse_real("pi/2"), Some(FRAC_PI_2));
        assert_eq!(parse_real("3*pi/4"), Some(3.0 * PI / 4.0));
        assert_eq!(parse_real("-pi/2"), Some(-FRAC_PI_2));
        assert_eq!(parse_real("1/240"), Some(1.0 / 240.0));
        assert_eq!(parse_real("1e-3"), Some(1e-3));
        assert_eq!(parse_real(""), None);
        assert_eq!(parse_real("pi*"), None);
        assert_eq!(parse_real("1/0"), None);
        assert_eq!(parse_real("two"), None);
    }

    #[test]
    fn parses_full_script() {
        let text = "\
# demo
seed: 42
dt: 1/240
j_max: 1
theta_d: 5
duration: 2
qubit 0 pi 0 0 0 0
qubit 1 0 0 8 0 0   # far away
at 1.5 measure 0
at 0.5 move 1 0 0 0
at 1 gate H 0
at 1 gate CNOT 0 1
at 1.75 freeze
at 1.8 unfreeze
";
        let s = ScenarioScript::parse(text).unwrap();
        assert_eq!(s.seed, 42);
        assert_eq!(s.dt, 1.0 / 240.0);
        assert_eq!(s.qubits.len(), 2);
        assert_eq!(s.qubits[0].theta, PI);
        assert_eq!(s.qubits[1].position, [8.0, 0.0, 0.0]);
        let times: Vec<f64> = s.commands.iter().map(|c| c.at).collect();
        assert_eq!(times, vec![0.5, 1.0, 1.0, 1.5, 1.75, 1.8]);
        assert_eq!(s.commands[1].command, Command::ApplyGate { gate: Gate::H, targets: vec![0] });
        assert_eq!(s.commands[2].command, Command::ApplyGate { gate: Gate::Cnot, targets: vec![0, 1] });
        assert_eq!(s.total_ticks(), 480);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let cases = [
            ("seed: -1", 1),
            ("dt: 0", 1),
            ("qubit 0 0 0 0 0 0\nqubit 2 0 0 0 0 0", 2),
            ("qubit 0 4 0 0 0 0", 1),
            ("qubit 0 0 0 0 0 0\nat 1 gate T 0", 2),
            ("qubit 0 0 0 0 0 0\nat 1 gate H 1", 2),
            ("qubit 0 0 0 0 0 0\n\nat 1 measure", 3),
            ("qubit 0 0 0 0 0 0\nat 1 jump 0", 2),
            ("bogus line", 1),
            ("seed: 1\nseed: 2", 2),
            ("qubit 0 0 0 0 0 0\nat -1 freeze", 2),
            ("qubit 0 0 0 0 0 0\nat 1 freeze\nqubit 1 0 0 0 0 0", 3),
            ("duration: 1\nqubit 0 0 0 0 0 0\nat 2 freeze", 3),
            ("qubit 0 0 0 0 0 0\nqubit 1 0 0 0 0 0\nqubit 2 0 0 0 0 0\nqubit 3 0 0 0 0 0", 4),
        ];
        for (text, line) in cases {
            let e = ScenarioScript::parse(text).unwrap_err();
            assert_eq!(e.line, line, "{text:?}: {e}");
        }
    }

    #[test]
    fn empty_script_runs_zero_ticks() {
        let s = ScenarioScript::parse("").unwrap();
        let run = run_scenario(&s).unwrap();
        assert!(run.series.rows.is_empty());
        assert_eq!(run.series.columns, ["step", "clock", "sim_time", "frozen"]);
        let mut csv = Vec::new();
        run.series.write_csv(&mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap(), "step,clock,sim_time,frozen\n");
    }

    #[test]
    fn idle_qubit_gives_constant_series() {
        let s = ScenarioScript::parse("ticks: 50\nqubit 0 0 0 0 0 0").unwrap();
        let run = run_scenario(&s).unwrap();
        assert_eq!(run.series.rows.len(), 50);
        for name in ["q0_p0", "q0_w", "q0_radius"] {
            assert!(run.series.column(name).unwrap().iter().all(|&x| x == 1.0), "{name}");
        }
        assert!(run.series.column("q0_s2").unwrap().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn commands_fire_on_schedule() {
        let text = "dt: 0.25\nduration: 2\nqubit 0 0 0 0 0 0\nat 0.5 gate X 0\nat 1 freeze\nat 1.5 unfreeze\nat 2 gate X 0";
        let run = run_scenario(&ScenarioScript::parse(text).unwrap()).unwrap();
        let p0 = run.series.column("q0_p0").unwrap();
        // Step k is recorded after the commands due at clock (k-1)·dt.
        assert_eq!(p0, vec![1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let sim = run.series.column("sim_time").unwrap();
        assert_eq!(sim, vec![0.25, 0.5, 0.75, 1.0, 1.0, 1.0, 1.25, 1.5]);
        // The final command lands after the last row.
        assert_eq!(run.scene.report().per_qubit_p0[0], 1.0);
    }

    #[test]
    fn event_log_is_json_lines() {
        let text = "ticks: 3\nqubit 0 pi/2 0 0 0 0\nat 0 measure 0";
        let run = run_scenario(&ScenarioScript::parse(text).unwrap()).unwrap();
        let mut out = Vec::new();
        write_events(&run.events, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), run.events.len());
        let parsed: Vec<Event> = lines.iter().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(parsed, run.events);
        assert!(lines[0].contains("\"kind\":\"seeded\""));
        let seqs: Vec<u64> = parsed.iter().map(|e| e.seq).collect();
        assert!(seqs.windows(2).all(|w| w[0] < w[1]));
    }
}
