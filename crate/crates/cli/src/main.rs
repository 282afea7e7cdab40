use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use ftj_cli::config::{RunConfig, BASELINE_PRESET};
use ftj_cli::run::{self, Run};
use ftj_core::electrostatics::CouplingMethod;
use ftj_core::exec::Execution;

/// Multi-domain ferroelectric tunnel junction simulator.
#[derive(Parser)]
#[command(name = "ftj", version)]
struct Cli {
    /// Run config; the built-in TiN/HZO/Al2O3/TiN baseline when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, default_value = "ftj-out")]
    out: PathBuf,

    /// Overrides the config's variation seed.
    #[arg(long, global = true, env = "FTJ_SEED")]
    seed: Option<u64>,

    /// Worker threads for the parallel loops.
    #[arg(long, global = true, env = "FTJ_WORKERS")]
    workers: Option<usize>,

    /// Run everything on the calling thread.
    #[arg(long, global = true)]
    deterministic: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Preconditioned Q-V_F loop (qvf.csv).
    Hysteresis,
    /// One preset/set/retention/read sequence (trace.csv, summary.csv).
    ProgramRead {
        /// Overrides experiment.v_set, V.
        #[arg(long, allow_hyphen_values = true)]
        v_set: Option<f64>,
    },
    /// Read current against set voltage (ir_vs_vset.csv, minor_loops.csv).
    SweepVset,
    /// Low and high V_SET reads across dielectric thicknesses (td_sweep.csv).
    SweepTd,
    /// Lists the built-in materials and electrodes.
    Materials,
    /// Builds and writes the inverse-capacitance matrix with a residual report.
    CouplingMatrix {
        /// Overrides electrostatics.method.
        #[arg(long)]
        method: Option<CouplingMethod>,
    },
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    if let Err(err) = real_main() {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn real_main() -> Result<()> {
    let cli = Cli::parse();
    if let Command::Materials = cli.command {
        return run::materials(std::io::stdout().lock());
    }
    if let Some(n) = cli.workers {
        Execution::configure_workers(n).map_err(anyhow::Error::msg).context("configuring workers")?;
    }
    let mut config = match &cli.config {
        Some(path) => RunConfig::from_path(path)?,
        None => {
            log::info!("no --config given, using the built-in baseline");
            RunConfig::from_toml_str(BASELINE_PRESET)?
        }
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    match &cli.command {
        Command::ProgramRead { v_set: Some(v) } => config.experiment.v_set = *v,
        Command::CouplingMatrix { method: Some(m) } => config.electrostatics.method = *m,
        _ => {}
    }
    run::check_out_dir(&cli.out)?;
    let exec = if cli.deterministic {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    let r = Run {
        config,
        out: cli.out,
        exec,
    };
    match cli.command {
        Command::Hysteresis => r.hysteresis(),
        Command::ProgramRead { .. } => r.program_read(),
        Command::SweepVset => r.sweep_vset(),
        Command::SweepTd => r.sweep_td(),
        Command::CouplingMatrix { .. } => r.coupling_matrix(),
        Command::Materials => unreachable!("handled above"),
    }
}
