//! `mcla`: capacity curves, thresholds, code design and BER simulation for
//! optimum linear LLRs on fading channels.

mod commands;
mod common;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use commands::{AlistArgs, BerArgs, CapacityArgs, DesignArgs, MclaArgs, RangeArgs, ThresholdArgs};
use common::ConfigFile;

#[derive(Debug, Parser)]
#[command(name = "mcla", version, about = "Optimum linear LLR workbench for fading channels")]
struct Cli {
    /// JSON file whose keys override the subcommand's options.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true, env = "MCLA_WORKERS")]
    workers: Option<usize>,
    /// Log more detail to stderr (repeat for per-batch and per-probe lines).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    /// Log only warnings and errors.
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tabulate Ĉ(r̂) and the capacity summary over a noise grid.
    Capacity(CapacityArgs),
    /// Optimum linear LLR coefficient at one noise level.
    Mcla(MclaArgs),
    /// Density-evolution threshold of an ensemble.
    Threshold(ThresholdArgs),
    /// Monte Carlo BER of a finite-length code.
    Ber(BerArgs),
    /// Optimize a variable degree distribution.
    Design(DesignArgs),
    /// Iterations to a target error rate over fixed-α and optimum-α columns.
    Range(RangeArgs),
    /// Build a code from an ensemble or normalize an alist file.
    AlistConvert(AlistArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Capacity(_) => "capacity",
            Command::Mcla(_) => "mcla",
            Command::Threshold(_) => "threshold",
            Command::Ber(_) => "ber",
            Command::Design(_) => "design",
            Command::Range(_) => "range",
            Command::AlistConvert(_) => "alist-convert",
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let level = match (cli.quiet, cli.verbose) {
        (true, _) => "warn",
        (false, 0) => "info",
        (false, 1) => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let name = cli.command.name();
    let config = match &cli.config {
        Some(path) => ConfigFile::load(path, name)?,
        None => ConfigFile::default(),
    };
    let workers = config
        .workers
        .or(cli.workers)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build_global()
        .context("starting the worker pool")?;

    let ctx = commands::Context { name, workers };
    match cli.command {
        Command::Capacity(a) => commands::capacity(&ctx, config.apply(a)?),
        Command::Mcla(a) => commands::mcla(&ctx, config.apply(a)?),
        Command::Threshold(a) => commands::threshold(&ctx, config.apply(a)?),
        Command::Ber(a) => commands::ber(&ctx, config.apply(a)?),
        Command::Design(a) => commands::design(&ctx, config.apply(a)?),
        Command::Range(a) => commands::range(&ctx, config.apply(a)?),
        Command::AlistConvert(a) => commands::alist_convert(&ctx, config.apply(a)?),
    }
}
