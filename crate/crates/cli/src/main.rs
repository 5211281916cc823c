//! `kfca`: command-line runner for the peer-prediction experiments.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 bad configuration.

mod commands;
mod context;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use crate::commands::Resolved;
use crate::context::{Context, Failure};

#[derive(Parser, Debug)]
#[command(name = "kfca", version, about = "Peer-prediction reward experiments", long_about = None)]
struct Cli {
    /// Config file (sectioned key = value text; see `kfca simulate --help`).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Root seed; overrides the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads: a number or `max` (default: all hardware threads).
    #[arg(long, global = true, default_value = "max")]
    workers: String,

    /// Output directory.
    #[arg(long, global = true, env = "KFCA_OUT_DIR", default_value = "kfca-out")]
    out_dir: PathBuf,

    /// Format of tabular outputs.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Multi-round federated simulation; writes rewards, verdicts and a manifest.
    Simulate(commands::simulate::Args),
    /// Exhaustive strategy-profile table for one delta matrix.
    Truthfulness(commands::truthfulness::Args),
    /// Honest-client reward against a malicious fraction, closed form vs simulation.
    Robustness(commands::robustness::Args),
    /// Exact and Monte Carlo Shapley values with distance metrics.
    Shapley(commands::shapley::Args),
    /// Single-threaded scaling benchmark of KFCA and estimated-delta CA.
    Bench(commands::bench::Args),
    /// Estimated delta matrices and categorical-world verdicts for a report file.
    DeltaCheck(commands::delta_check::Args),
    /// Hash commitment to a report file.
    Commit(commands::commit::CommitArgs),
    /// Checks a report file against a commitment; exit 1 on mismatch.
    Verify(commands::commit::VerifyArgs),
    /// Re-runs the command recorded in a manifest.
    Replay(commands::replay::Args),
}

fn workers(spec: &str) -> Result<usize, Failure> {
    if spec.eq_ignore_ascii_case("max") {
        return Ok(std::thread::available_parallelism().map_or(1, |n| n.get()));
    }
    match spec.parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(Failure::config(format!("--workers must be a positive number or `max`, got {spec:?}"))),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let workers = workers(&cli.workers)?;
    let global = commands::Global {
        config: cli.config,
        seed: cli.seed,
        format: cli.format,
    };
    let resolved = match cli.command {
        Command::Simulate(a) => commands::simulate::resolve(a, &global)?,
        Command::Truthfulness(a) => commands::truthfulness::resolve(a, &global)?,
        Command::Robustness(a) => commands::robustness::resolve(a, &global)?,
        Command::Shapley(a) => commands::shapley::resolve(a, &global)?,
        Command::Bench(a) => commands::bench::resolve(a, &global)?,
        Command::DeltaCheck(a) => commands::delta_check::resolve(a, &global)?,
        Command::Commit(a) => commands::commit::resolve_commit(a, &global)?,
        Command::Verify(a) => commands::commit::resolve_verify(a, &global)?,
        Command::Replay(a) => {
            let check = a.check;
            let (resolved, expected) = commands::replay::resolve(a)?;
            let outputs = execute(resolved, cli.out_dir, workers)?;
            if check {
                commands::replay::compare(&expected, &outputs)?;
            }
            return Ok(());
        }
    };
    execute(resolved, cli.out_dir, workers).map(drop)
}

fn execute(resolved: Resolved, out_dir: PathBuf, workers: usize) -> Result<Vec<manifest::OutputFile>, Failure> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Failure::runtime(format!("thread pool: {e}")))?;
    let mut ctx = Context::new(out_dir, workers)?;
    let outcome = pool.install(|| commands::execute(&resolved, &mut ctx));
    // the manifest is written even when verification fails
    let outputs = ctx.finish(&resolved)?;
    outcome.map(|()| outputs)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
