use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use winex_core::config::ExperimentConfig;
use winex_core::harness::{self, Outcome, RunOptions};
use winex_core::parallel::with_workers;
use winex_core::Error;

/// Window-constrained exclusion process: exact checks, ensembles and PDE comparison.
#[derive(Parser, Debug)]
#[command(name = "winex", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML experiment config; built-in defaults when absent.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Master seed (overrides `ensemble.master_seed` and `verify.seed`).
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Worker threads for replicas and exact scans.
    #[arg(long, global = true, value_name = "INT")]
    workers: Option<usize>,
    /// Audit the rate cache periodically in every simulation.
    #[arg(long, global = true)]
    debug_audit: bool,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Exact small-lattice identities; exits 1 if any metric fails.
    Verify,
    /// Replica ensembles for every model size.
    Simulate,
    /// Finite-difference solution of the limiting equation.
    Pde,
    /// Ensemble against reference distances across model sizes.
    Converge,
    /// Event throughput and rate-refresh cost.
    Bench,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Audit(_) => 1,
        Error::Io { .. } => 3,
        Error::Config(_) | Error::Parameter(_) | Error::Domain(_) | Error::Capability(_) => 2,
    }
}

fn run(cli: &Cli) -> Result<Outcome, Error> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let opts = RunOptions {
        out: cli.out.clone(),
        seed: cli.seed,
        debug_audit: cli.debug_audit,
    };
    opts.apply(&mut cfg);
    if cli.workers == Some(0) {
        return Err(Error::Config("--workers must be positive".into()));
    }
    with_workers(cli.workers, || match cli.command {
        Command::Verify => harness::cmd_verify(&cfg),
        Command::Simulate => harness::cmd_simulate(&cfg, &opts),
        Command::Pde => harness::cmd_pde(&cfg),
        Command::Converge => harness::cmd_converge(&cfg, &opts),
        Command::Bench => harness::cmd_bench(&cfg, &opts),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            for line in &outcome.lines {
                println!("{line}");
            }
            println!("outputs: {}", outcome.dir.display());
            ExitCode::from(if outcome.passed { 0 } else { 1 })
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
