//! Command-line front end for the tilted-chain simulator: band topology
//! scans, spectroscopy protocols, interferometer runs, noise-sensitivity
//! tables and a quick validation suite, all emitting deterministic CSV/JSON
//! artifacts plus a manifest.

mod commands;
mod config;
mod output;

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use config::ConfigMap;

#[derive(Parser)]
#[command(
    name = "trm",
    version,
    about = "Simulator for a two-level lattice chain driven by carrier and sideband tones: \
             winding-number spectroscopy, mean-displacement topology probes, clock noise \
             comparisons and matter-wave interferometry."
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct Common {
    /// Flat dotted-key JSON config file; flags override file values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Master seed for noise ensembles.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Worker threads; defaults to TRM_WORKERS, then all cores.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Noise realizations for ensemble commands.
    #[arg(long, global = true)]
    realizations: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Winding number and Zak phase over a list of coupling ratios.
    Winding,
    /// Mean-displacement traces x(T) over coupling ratios.
    MdScan,
    /// One-step bond-current signal against detuning, with linear fits.
    IxScan,
    /// Lattice-clock shot ensemble against a Rabi baseline.
    Clock,
    /// Matter-wave interferometer protocols: pulse trains and pump ramps.
    Mwi,
    /// Technical-noise variances and clock instability against atom number.
    Sensitivity,
    /// Fast self-check table; exits nonzero when any check fails.
    Validate,
}

fn resolve_workers(common: &Common, cfg: &ConfigMap) -> Result<Option<usize>> {
    if let Some(n) = common.workers {
        return Ok(Some(n));
    }
    if let Ok(text) = std::env::var("TRM_WORKERS") {
        let n: usize = text
            .parse()
            .with_context(|| format!("TRM_WORKERS must be an integer, got {text:?}"))?;
        return Ok(Some(n));
    }
    cfg.usize_opt("workers")
}

fn main() {
    if let Err(err) = run() {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    let cfg = ConfigMap::load(cli.common.config.as_deref())?;
    cfg.u64_opt("seed")?;
    cfg.usize_opt("realizations")?;
    let workers = resolve_workers(&cli.common, &cfg)?;
    if let Some(n) = workers.filter(|n| *n > 0) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("sizing the worker pool")?;
    }
    match cli.command {
        Cmd::Winding => commands::winding::run(&cli.common, &cfg, workers),
        Cmd::MdScan => commands::md_scan::run(&cli.common, &cfg, workers),
        Cmd::IxScan => commands::ix_scan::run(&cli.common, &cfg, workers),
        Cmd::Clock => commands::clock::run(&cli.common, &cfg, workers),
        Cmd::Mwi => commands::mwi::run(&cli.common, &cfg, workers),
        Cmd::Sensitivity => commands::sensitivity::run(&cli.common, &cfg, workers),
        Cmd::Validate => commands::validate::run(&cli.common, &cfg, workers),
    }
}
