//! `corrsync`: run a scenario, write plot-ready tables and a manifest.

mod config;
mod error;
mod output;
mod scenarios;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;

use config::{merge, FileConfig, Format};
use error::CliError;
use output::{write_outputs, Artifact, Manifest, Outputs, MANIFEST_NAME, SCHEMA_VERSION};
use scenarios::*;

#[derive(Debug, Parser)]
#[command(name = "corrsync", version, about = "Correlated-noise dephasing, synchronization and quantumness")]
struct Cli {
    /// Master seed for every random stream (default 0).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default corrsync-out).
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Table format (default csv).
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form dephasing exponents, coherence and Bell-state purities.
    Dephase(DephaseArgs),
    /// Master-equation evolution of two qubits or two oscillators.
    Evolve(EvolveArgs),
    /// Drift eigenvalues over a complex ξ grid.
    EpScan(EpScanArgs),
    /// Locate exceptional points and their gap exponents.
    EpFind(EpFindArgs),
    /// Track eigenvalues around a loop in complex ξ.
    Monodromy(MonodromyArgs),
    /// Time-averaged phase locking of the amplitude ensemble.
    Sync(SyncArgs),
    /// Rényi-2 quantumness of the steady state versus ξ.
    Qcorr(QcorrArgs),
    /// Irrep-resolved dephasing on a noise graph.
    GraphModes(GraphModesArgs),
    /// Export sampled correlated noise paths.
    Trajectories(TrajectoriesArgs),
    /// Re-run a scenario from a manifest into a new output directory.
    Replay {
        /// Path to a manifest.json written by an earlier run.
        manifest: PathBuf,
    },
}

const SCENARIOS: [&str; 9] = [
    "dephase",
    "evolve",
    "ep-scan",
    "ep-find",
    "monodromy",
    "sync",
    "qcorr",
    "graph-modes",
    "trajectories",
];

fn run_with<A, F>(file: &toml::Table, flags: &A, ctx: &RunContext, f: F) -> Result<(serde_json::Value, Outputs), CliError>
where
    A: Serialize + DeserializeOwned,
    F: FnOnce(&mut A, &RunContext) -> Result<Outputs, CliError>,
{
    let mut args: A = merge(file, flags)?;
    let out = f(&mut args, ctx)?;
    let mut config = serde_json::to_value(&args)?;
    if let Some(map) = config.as_object_mut() {
        map.retain(|_, v| !v.is_null());
    }
    Ok((config, out))
}

/// Dispatch by scenario name. `flags` is `None` when replaying, in which case
/// every parameter comes from `file`.
fn dispatch(
    scenario: &str,
    flags: Option<&Command>,
    file: &toml::Table,
    ctx: &RunContext,
) -> Result<(serde_json::Value, Outputs), CliError> {
    macro_rules! go {
        ($variant:ident, $args:ty, $f:expr) => {{
            let default = <$args>::default();
            let flags = match flags {
                Some(Command::$variant(a)) => a,
                _ => &default,
            };
            run_with(file, flags, ctx, $f)
        }};
    }
    match scenario {
        "dephase" => go!(Dephase, DephaseArgs, dephase),
        "evolve" => go!(Evolve, EvolveArgs, evolve_scenario),
        "ep-scan" => go!(EpScan, EpScanArgs, ep_scan),
        "ep-find" => go!(EpFind, EpFindArgs, ep_find),
        "monodromy" => go!(Monodromy, MonodromyArgs, monodromy),
        "sync" => go!(Sync, SyncArgs, sync),
        "qcorr" => go!(Qcorr, QcorrArgs, qcorr),
        "graph-modes" => go!(GraphModes, GraphModesArgs, graph_modes),
        "trajectories" => go!(Trajectories, TrajectoriesArgs, trajectories),
        other => Err(CliError::Config(format!(
            "unknown scenario `{other}`; expected one of {}",
            SCENARIOS.join(", ")
        ))),
    }
}

fn scenario_name(c: &Command) -> &'static str {
    match c {
        Command::Dephase(_) => "dephase",
        Command::Evolve(_) => "evolve",
        Command::EpScan(_) => "ep-scan",
        Command::EpFind(_) => "ep-find",
        Command::Monodromy(_) => "monodromy",
        Command::Sync(_) => "sync",
        Command::Qcorr(_) => "qcorr",
        Command::GraphModes(_) => "graph-modes",
        Command::Trajectories(_) => "trajectories",
        Command::Replay { .. } => "replay",
    }
}

/// Rebuild a file configuration from a manifest.
fn manifest_config(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let m: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("bad manifest: {e}")))?;
    let field = |k: &str| m.get(k).ok_or_else(|| CliError::Config(format!("manifest lacks `{k}`")));
    let version = field("schema_version")?.as_u64();
    if version != Some(u64::from(SCHEMA_VERSION)) {
        return Err(CliError::Config(format!(
            "manifest schema version {version:?} is not {SCHEMA_VERSION}"
        )));
    }
    let params = toml::Table::try_from(field("config")?).map_err(|e| CliError::Config(e.to_string()))?;
    Ok(FileConfig {
        scenario: field("scenario")?.as_str().map(str::to_string),
        seed: field("seed")?.as_u64(),
        format: serde_json::from_value(field("format")?.clone()).ok(),
        output: None,
        threads: None,
        params,
    })
}

fn run(cli: Cli) -> Result<PathBuf, CliError> {
    let started = Instant::now();
    let (file, flags) = match &cli.command {
        Command::Replay { manifest } => {
            if cli.config.is_some() {
                return Err(CliError::Config("replay takes its configuration from the manifest".into()));
            }
            if cli.output.is_none() {
                return Err(CliError::Config("replay needs an explicit --output directory".into()));
            }
            (manifest_config(manifest)?, None)
        }
        other => {
            let file = match &cli.config {
                Some(path) => FileConfig::load(path)?,
                None => FileConfig::default(),
            };
            if let Some(s) = &file.scenario {
                if s != scenario_name(other) {
                    return Err(CliError::Config(format!(
                        "configuration is for scenario `{s}`, not `{}`",
                        scenario_name(other)
                    )));
                }
            }
            (file, Some(other))
        }
    };
    let scenario = match flags {
        Some(c) => scenario_name(c).to_string(),
        None => file
            .scenario
            .clone()
            .ok_or_else(|| CliError::Config("manifest lacks a scenario".into()))?,
    };
    let ctx = RunContext {
        seed: cli.seed.or(file.seed).unwrap_or(0),
        format: cli.format.or(file.format).unwrap_or_default(),
    };
    let output = cli
        .output
        .clone()
        .or(file.output.clone())
        .unwrap_or_else(|| PathBuf::from("corrsync-out"));
    let threads = match cli.threads.or(file.threads) {
        Some(0) => return Err(CliError::Config("--threads must be >= 1".into())),
        Some(n) => {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| CliError::Config(e.to_string()))?;
            n
        }
        None => rayon::current_num_threads(),
    };

    let (config, outputs) = dispatch(&scenario, flags, &file.params, &ctx)?;
    let mut artifacts = outputs.artifacts;
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        engine_version: corrsync::engine_version(),
        scenario,
        seed: ctx.seed,
        format: ctx.format,
        threads,
        config,
        outputs: artifacts.iter().map(|a| a.path.to_string_lossy().into_owned()).collect(),
        summary: outputs.summary,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    };
    artifacts.push(Artifact::json(MANIFEST_NAME, &manifest)?);
    write_outputs(&output, &artifacts)?;
    Ok(output)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(dir) => {
            log::info!("outputs written to {}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
