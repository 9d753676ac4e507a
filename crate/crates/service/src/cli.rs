//! Command-line entry points.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qsandbox_core::scenario::write_events;
use qsandbox_core::{run_scenario, ScenarioError, ScenarioScript};
use tracing::error;

use crate::config::{ConfigError, ServiceConfig};
use crate::server::{self, ServeOutcome};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_PARSE: u8 = 2;
pub const EXIT_HALT: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "qsandbox", version, about = "Spatial qubit sandbox: scenario runner and live service")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Replay a scenario script and write its time series as CSV.
    Run(RunArgs),
    /// Serve the live scene over WebSocket at /ws.
    Serve(ServeArgs),
    /// Parse and check a scenario script without running it.
    Validate { script: PathBuf },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    pub script: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the event log, one JSON object per line.
    #[arg(long)]
    pub events: Option<PathBuf>,
    /// Override the script's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the script's time step.
    #[arg(long)]
    pub dt: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "QSANDBOX_PORT")]
    pub port: Option<u16>,
    #[arg(long, env = "QSANDBOX_CONFIG")]
    pub config: Option<PathBuf>,
}

pub fn execute(cli: Cli) -> ExitCode {
    let code = match cli.command {
        CliCommand::Run(args) => run(&args),
        CliCommand::Validate { script } => validate(&script),
        CliCommand::Serve(args) => serve(&args),
    };
    ExitCode::from(code)
}

/// Exit status for a failed scenario run.
pub fn exit_code_for(err: &ScenarioError) -> u8 {
    match err {
        ScenarioError::Script(_) => EXIT_PARSE,
        ScenarioError::Sim(_) => EXIT_HALT,
        ScenarioError::Output(_) => EXIT_FAILURE,
    }
}

fn load_script(path: &Path) -> Result<ScenarioScript, u8> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        EXIT_FAILURE
    })?;
    let script = ScenarioScript::parse(&text).map_err(|e| {
        eprintln!("error: {}:{e}", path.display());
        EXIT_PARSE
    })?;
    Ok(script)
}

fn run(args: &RunArgs) -> u8 {
    let mut script = match load_script(&args.script) {
        Ok(s) => s,
        Err(code) => return code,
    };
    if let Some(seed) = args.seed {
        script.seed = seed;
    }
    if let Some(dt) = args.dt {
        script.dt = dt;
    }
    if let Err(e) = script.validate() {
        eprintln!("error: {}:{e}", args.script.display());
        return EXIT_PARSE;
    }
    let result = run_scenario(&script).and_then(|run| {
        write_output(&args.out, |w| run.series.write_csv(w))?;
        if let Some(path) = &args.events {
            write_output(path, |w| write_events(&run.events, w))?;
        }
        Ok(run)
    });
    match result {
        Ok(run) => {
            eprintln!(
                "{} steps, sim_time {}, {} events",
                run.series.rows.len(),
                run.scene.sim_time(),
                run.events.len()
            );
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn write_output(
    path: &Path,
    write: impl FnOnce(&mut BufWriter<File>) -> Result<(), ScenarioError>,
) -> Result<(), ScenarioError> {
    let output = |e: std::io::Error| ScenarioError::Output(format!("{}: {e}", path.display()));
    let mut w = BufWriter::new(File::create(path).map_err(output)?);
    write(&mut w)?;
    w.flush().map_err(output)
}

fn validate(path: &Path) -> u8 {
    let script = match load_script(path) {
        Ok(s) => s,
        Err(code) => return code,
    };
    if let Err(e) = script.validate() {
        eprintln!("error: {}:{e}", path.display());
        return EXIT_PARSE;
    }
    println!(
        "ok: {} qubits, {} commands, {} steps of dt {}",
        script.qubits.len(),
        script.commands.len(),
        script.total_ticks(),
        script.dt
    );
    EXIT_OK
}

fn serve(args: &ServeArgs) -> u8 {
    let mut config = match &args.config {
        Some(path) => match ServiceConfig::load(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return match e {
                    ConfigError::Io { .. } => EXIT_FAILURE,
                    _ => EXIT_PARSE,
                };
            }
        },
        None => ServiceConfig::default(),
    };
    if let Some(port) = args.port {
        config.port = port;
    }
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(rt) => rt,
        Err(e) => {
            eprintln!("error: cannot start runtime: {e}");
            return EXIT_FAILURE;
        }
    };
    runtime.block_on(async move {
        let mut server = match server::start(&config).await {
            Ok(s) => s,
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_FAILURE;
            }
        };
        eprintln!("serving ws://{}/ws", server.addr);
        if let Some(stop) = server.take_stop() {
            tokio::spawn(async move {
                if tokio::signal::ctrl_c().await.is_ok() {
                    let _ = stop.send(());
                }
            });
        }
        match server.wait().await {
            Ok(ServeOutcome::Shutdown) => EXIT_OK,
            Ok(ServeOutcome::Halted(diagnostic)) => {
                error!("{diagnostic}");
                EXIT_HALT
            }
            Err(e) => {
                eprintln!("error: {e}");
                EXIT_FAILURE
            }
        }
    })
}
