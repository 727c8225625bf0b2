//! `jointges`: simulate, fit, evaluate and replicate joint DAG estimation.

mod commands;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{evaluate, fit, replicate, simulate};
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "jointges", version, about = "Joint estimation of multiple Gaussian DAGs")]
struct Cli {
    /// Seed for every random choice (simulation, CV folds, replicates).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, env = "JOINTGES_OUT", default_value = "jointges-out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw a random collection of SEMs and sample each class.
    Simulate(simulate::SimulateArgs),
    /// Estimate class DAGs from per-class sample files.
    Fit(fit::FitArgs),
    /// Compare estimated graphs with true graphs.
    Evaluate(evaluate::EvaluateArgs),
    /// Run the joint-versus-separate simulation study.
    Replicate(replicate::ReplicateArgs),
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(CliError::config("--jobs: must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| CliError::config(format!("--jobs: {e}")))?;
    }
    let parallel = cli.jobs != Some(1);
    match &cli.command {
        Command::Simulate(a) => simulate::run(a, cli.seed, &cli.out),
        Command::Fit(a) => fit::run(a, cli.seed, parallel, &cli.out),
        Command::Evaluate(a) => evaluate::run(a, &cli.out),
        Command::Replicate(a) => replicate::run(a, cli.seed, &cli.out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(e.code)
        }
    }
}
