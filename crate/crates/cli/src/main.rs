use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use szego_cli::error::EXIT_INVARIANT_FAILURE;
use szego_cli::{run_experiment, Experiment, ExperimentConfig, Overrides};

/// Spectral limits of truncated Toeplitz-like operators on the
/// Drury-Arveson space: experiment runner.
#[derive(Parser)]
#[command(name = "szego", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep cutoffs and compare eigenvalue statistics with the
    /// push-forward of surface measure under the symbol.
    Run(CommonArgs),
    /// Følner ratios (commutator and corner conditions) for the shift
    /// generators and the configured symbol.
    Folner(CommonArgs),
    /// Kolmogorov distance between Drury-Arveson and weighted Bergman
    /// spectra of the same symbol.
    Bergman(CommonArgs),
    /// Geometric means of truncation spectra against exp(∫ log φ dσ).
    Det(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Experiment configuration file (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// RNG seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Cap on the truncation size d_N (overrides the config).
    #[arg(long)]
    max_rank: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, args) = match &cli.command {
        Command::Run(args) => (Experiment::Szego, args),
        Command::Folner(args) => (Experiment::Folner, args),
        Command::Bergman(args) => (Experiment::Bergman, args),
        Command::Det(args) => (Experiment::Determinant, args),
    };
    let overrides = Overrides {
        out: args.out.clone(),
        seed: args.seed,
        max_rank: args.max_rank,
    };

    let config = match ExperimentConfig::load(&args.config, &overrides) {
        Ok(config) => config,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run_experiment(experiment, &config) {
        Ok(verdict) => {
            for invariant in &verdict.invariants {
                println!(
                    "{} [{}] {}: {}",
                    if invariant.pass { "pass" } else { "FAIL" },
                    if invariant.enforced {
                        "enforced"
                    } else {
                        "info"
                    },
                    invariant.name,
                    invariant.detail
                );
            }
            println!(
                "{}: verdict {} (reports in {})",
                verdict.experiment,
                if verdict.pass { "pass" } else { "FAIL" },
                config.output_dir.display()
            );
            if verdict.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_INVARIANT_FAILURE as u8)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
