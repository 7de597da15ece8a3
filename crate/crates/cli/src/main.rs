mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::{CliResult, Failure};

/// Spectral and Monte-Carlo analysis of two-spin Gibbs distributions.
///
/// Exit codes: 0 success or in regime, 2 usage/input error, 3 out of regime,
/// 4 resource cap exceeded, 5 violation.
#[derive(Parser, Debug)]
#[command(name = "gibbs-spectral", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Spectral quantities, thresholds and regime verdicts.
    Analyze(commands::AnalyzeArgs),
    /// Oracle-equivalence and inequality checks on one instance.
    Verify(commands::VerifyArgs),
    /// JSON regime verdict; exit code 3 when out of regime.
    Regime(commands::RegimeArgs),
    /// Glauber samples as JSON lines.
    Sample(commands::SampleArgs),
    /// Total-variation curve as CSV.
    Mix(commands::MixArgs),
    /// Partition-function estimate as JSON.
    EstimateZ(commands::EstimateZArgs),
}

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("GIBBS_SPECTRAL_THREADS") else {
        return Ok(());
    };
    let n: usize = match raw.trim().parse() {
        Ok(n) if n > 0 => n,
        _ => return Err(Failure::Usage(format!("GIBBS_SPECTRAL_THREADS must be a positive integer, got {raw:?}"))),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Violation(format!("thread pool: {e}")))
}

fn run(cli: &Cli) -> CliResult<ExitCode> {
    configure_threads()?;
    let ok = |b: bool, code: u8| if b { ExitCode::SUCCESS } else { ExitCode::from(code) };
    Ok(match &cli.command {
        Command::Analyze(a) => commands::analyze(a).map(|_| ExitCode::SUCCESS)?,
        Command::Verify(a) => ok(commands::verify(a)?, 5),
        Command::Regime(a) => ok(commands::regime(a)?, 3),
        Command::Sample(a) => commands::sample(a).map(|_| ExitCode::SUCCESS)?,
        Command::Mix(a) => commands::mix(a).map(|_| ExitCode::SUCCESS)?,
        Command::EstimateZ(a) => commands::estimate_z(a).map(|_| ExitCode::SUCCESS)?,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("gibbs-spectral: {f}");
            f.exit_code()
        }
    }
}
