use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{error, info, warn};

use mpflow::capillary::Formulation;
use mpflow::config::ScenarioConfig;
use mpflow::io::{write_checkpoint_file, write_vtk_file, Checkpoint, CsvWriter};
use mpflow::scenario;
use mpflow::solver::{designed_angle, run, stable_dt, SimState};
use mpflow::{ConfigError, IoError, SolverError};

#[derive(Parser)]
#[command(
    name = "mpflow",
    version,
    about = "Multi-phase flow with phase-field surface tension and VOF walls"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Args, Clone, Default)]
struct Flags {
    /// Directory for the CSV series, snapshots and checkpoints.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Diagnostic interval (μs).
    #[arg(long, global = true)]
    cadence: Option<f64>,
    /// Byte-identical output across runs.
    #[arg(long, global = true)]
    reproducible: bool,
    /// Stop after this many steps.
    #[arg(long, global = true)]
    max_steps: Option<u64>,
    /// Capillary force formulation: two-phase, wall-symmetric or n-phase.
    #[arg(long, global = true)]
    formulation: Option<Formulation>,
    /// Simulated end time (μs).
    #[arg(long, global = true)]
    end_time: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario from a TOML configuration.
    Run { config: PathBuf },
    /// Run one of the built-in benchmarks.
    Bench {
        #[command(subcommand)]
        which: Bench,
    },
    /// Check a configuration and report what it describes.
    Validate { config: PathBuf },
    /// Continue a run from a checkpoint.
    Resume { checkpoint: PathBuf },
}

#[derive(Subcommand)]
enum Bench {
    /// Liquid column rising in a 10 μm cup (30° wetting).
    Meniscus {
        /// Mesh spacing (μm).
        #[arg(long, default_value_t = 0.125)]
        spacing: f64,
    },
    /// Half-cylindrical drop relaxing on a flat wall.
    ContactAngle {
        #[arg(long, default_value_t = 60, value_parser = parse_angle)]
        angle: u32,
        /// Mesh spacing (μm).
        #[arg(long, default_value_t = 0.125)]
        spacing: f64,
    },
}

fn parse_angle(s: &str) -> Result<u32, String> {
    match s.parse::<u32>() {
        Ok(a) if [30, 45, 60, 90, 120].contains(&a) => Ok(a),
        _ => Err(format!(
            "angle must be one of 30, 45, 60, 90, 120 (got `{s}`)"
        )),
    }
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("checkpoint: {0}")]
    Checkpoint(IoError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Io(#[from] IoError),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Checkpoint(_) => 2,
            CliError::Solver(SolverError::Output(_)) | CliError::Io(_) => 1,
            CliError::Solver(_) => 3,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(IoError::Io(e))
    }
}

fn apply_overrides(cfg: &mut ScenarioConfig, flags: &Flags) -> Result<(), ConfigError> {
    if let Some(d) = &flags.output_dir {
        cfg.output.directory = d.clone();
    }
    if let Some(c) = flags.cadence {
        cfg.output.cadence_us = c;
    }
    if flags.reproducible {
        cfg.output.reproducible = true;
    }
    if let Some(f) = flags.formulation {
        cfg.numerics.formulation = f;
    }
    if let Some(t) = flags.end_time {
        cfg.numerics.end_time_us = t;
    }
    cfg.validate()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let flags = cli.flags;
    match cli.command {
        Command::Run { config } => {
            let mut cfg = ScenarioConfig::load(&config)?;
            apply_overrides(&mut cfg, &flags)?;
            let state = cfg.build_state()?;
            drive(&cfg, state, &flags, false)
        }
        Command::Bench { which } => {
            let mut cfg = match which {
                Bench::Meniscus { spacing } => scenario::meniscus(spacing),
                Bench::ContactAngle { angle, spacing } => {
                    scenario::contact_angle(angle as f64, spacing, 4)
                }
            };
            apply_overrides(&mut cfg, &flags)?;
            let state = cfg.build_state()?;
            drive(&cfg, state, &flags, false)
        }
        Command::Validate { config } => {
            let mut cfg = ScenarioConfig::load(&config)?;
            apply_overrides(&mut cfg, &flags)?;
            let state = cfg.build_state()?;
            let [nx, ny, nz] = state.grid.dims();
            println!("grid {nx}×{ny}×{nz}, spacing {} μm", state.grid.spacing());
            println!("stable Δt {:.4e} μs", stable_dt(&state));
            if state.wall.present {
                if let Some(angle) = designed_angle(&state, cfg.numerics.formulation) {
                    println!("designed contact angle {angle:.2}°");
                }
            }
            println!("config hash {}", hex(&cfg.hash()));
            Ok(())
        }
        Command::Resume { checkpoint } => {
            let ck = Checkpoint::read_file(&checkpoint).map_err(CliError::Checkpoint)?;
            let state = ck.restore().map_err(CliError::Checkpoint)?;
            let mut cfg = ck.config.clone();
            // only run-control flags apply; the physics must match the checkpoint
            if let Some(d) = &flags.output_dir {
                cfg.output.directory = d.clone();
            }
            if let Some(t) = flags.end_time {
                cfg.numerics.end_time_us = t;
            }
            if flags.cadence.is_some() || flags.formulation.is_some() {
                warn!("--cadence and --formulation are ignored when resuming");
            }
            info!("resuming at t = {} μs, step {}", state.time, state.step);
            drive(&cfg, state, &flags, true)
        }
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Run to completion, writing the CSV series, snapshots and checkpoints.
fn drive(
    cfg: &ScenarioConfig,
    mut state: SimState,
    flags: &Flags,
    resumed: bool,
) -> Result<(), CliError> {
    let dir = cfg.output.directory.clone();
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("config.toml"), cfg.to_toml())?;
    let csv_path = dir.join("diagnostics.csv");
    let mut csv = if resumed {
        CsvWriter::append(&csv_path)?
    } else {
        CsvWriter::create(&csv_path)?
    };
    let mut rc = cfg.run_config();
    rc.max_steps = flags.max_steps;
    let cadence = cfg.output.cadence_us;
    let (snap_every, ck_every) = (cfg.output.snapshot_every, cfg.output.checkpoint_every);
    if state.wall.present {
        if let Some(a) = designed_angle(&state, rc.capillary.formulation) {
            info!("designed contact angle {a:.2}°");
        }
    }
    let mut first = true;
    let result = run(&mut state, &rc, |s, row| {
        let skip = std::mem::take(&mut first) && resumed;
        if skip {
            return Ok(());
        }
        csv.write(row)?;
        let index = (row.t / cadence).round() as u64;
        if snap_every > 0 && index % snap_every == 0 {
            write_vtk_file(s, &dir.join(format!("snapshot_{index:06}.vtk")))?;
        }
        if ck_every > 0 && index % ck_every == 0 {
            csv.flush()?;
            write_checkpoint_file(s, cfg, &dir.join("checkpoint.bin"))?;
        }
        info!(
            "t = {:.4} μs  step {}  KE {:.4e}  SE {:.6e}  angle {}  div {:.2e}",
            row.t,
            s.step,
            row.kinetic_energy,
            row.surface_energy,
            row.contact_angle_deg
                .map(|a| format!("{a:.2}°"))
                .unwrap_or_else(|| "-".into()),
            row.max_divergence
        );
        Ok(())
    });
    csv.flush()?;
    let summary = match result {
        Ok(s) => s,
        Err(e) => {
            // keep whatever can be salvaged for post-mortem inspection
            if let Err(w) = write_vtk_file(&state, &dir.join("abort.vtk")) {
                warn!("could not write abort snapshot: {w}");
            }
            return Err(e.into());
        }
    };
    write_checkpoint_file(&state, cfg, &dir.join("checkpoint.bin"))?;
    write_vtk_file(&state, &final_path(&dir))?;
    info!(
        "done: {} steps, {} PCG iterations, {} divergence violations, {} energy-window violations",
        summary.steps,
        summary.total_pcg_iterations,
        summary.divergence_violations,
        summary.energy_violations
    );
    Ok(())
}

fn final_path(dir: &Path) -> PathBuf {
    dir.join("final.vtk")
}
