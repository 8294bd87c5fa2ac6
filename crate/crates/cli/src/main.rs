mod commands;
mod config;
mod error;
mod files;
mod manifest;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::Ctx;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "netcensus", version, about = "Geolocated IP-activity pipeline: synthetic worlds, aggregation, diffusion fits, sleep estimation, panel regressions")]
struct Cli {
    /// Seed for every random stage (world generation, SAEM, forest); overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads. Outputs do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// JSON run configuration with optional sections synth, aggregate, diffusion, sleep, panel.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic world with planted ground truth.
    Synth(commands::synth::Args),
    /// Join scans to cities, bin activity, count monthly unique addresses.
    Aggregate(commands::aggregate::Args),
    /// Fit logistic diffusion curves and rank countries.
    Diffusion(commands::diffusion::Args),
    /// Train or apply the sleep classifier.
    #[command(subcommand)]
    Sleep(commands::sleep::Command),
    /// Fixed-effects regressions of GDP and sector GVA on IP per capita.
    Panel(commands::panel::Args),
    /// Draw an SVG line or density plot from CSV columns.
    Plot(commands::plot::Args),
}

fn run(cli: Cli) -> Result<(), CliError> {
    let workers = match cli.workers {
        Some(0) => return Err(CliError::usage("--workers must be at least 1")),
        Some(n) => n,
        None => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build_global()
        .map_err(|e| CliError::usage(format!("cannot start {workers} workers: {e}")))?;
    let mut config = config::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        config.synth.seed = seed;
        config.diffusion.seed = seed;
        config.sleep.forest.seed = seed;
    }
    let ctx = Ctx { config, config_path: cli.config, seed: cli.seed, workers };
    match cli.command {
        Command::Synth(a) => commands::synth::run(&ctx, a),
        Command::Aggregate(a) => commands::aggregate::run(&ctx, a),
        Command::Diffusion(a) => commands::diffusion::run(&ctx, a),
        Command::Sleep(c) => commands::sleep::run(&ctx, c),
        Command::Panel(a) => commands::panel::run(&ctx, a),
        Command::Plot(a) => commands::plot::run(&ctx, a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
