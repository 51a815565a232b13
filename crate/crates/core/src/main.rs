use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use kdv_balance::config::{parse_config, Command};
use kdv_balance::runner::{self, EXIT_ERROR};

/// KdV balance-law verification runner.
///
/// Every subcommand reads a JSON configuration (see the repository README
/// for the schema) and writes CSV tables plus a manifest to the output
/// directory. Exit status: 0 all checks passed, 1 a check failed, 2
/// configuration or runtime error.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Args)]
struct CommonArgs {
    /// Path to the JSON configuration document.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the configured one.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Suppress per-check output.
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum CliCommand {
    /// Evolve the configured profile and record the trajectory.
    Simulate(CommonArgs),
    /// Evaluate all six balance residuals on the configured profile.
    VerifyIdentities(CommonArgs),
    /// Sweep epsilon and fit the residual scaling exponent.
    BalanceScan(CommonArgs),
    /// Write velocity/pressure slices at the configured heights.
    Fields(CommonArgs),
    /// Track the three conserved integrals along a trajectory.
    Drift(CommonArgs),
}

impl CliCommand {
    fn parts(&self) -> (Command, &CommonArgs) {
        match self {
            CliCommand::Simulate(a) => (Command::Simulate, a),
            CliCommand::VerifyIdentities(a) => (Command::VerifyIdentities, a),
            CliCommand::BalanceScan(a) => (Command::BalanceScan, a),
            CliCommand::Fields(a) => (Command::Fields, a),
            CliCommand::Drift(a) => (Command::Drift, a),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (expected, args) = cli.command.parts();

    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.config.display());
            return ExitCode::from(EXIT_ERROR as u8);
        }
    };
    let config = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_ERROR as u8);
        }
    };
    if config.command != expected {
        eprintln!(
            "error: configuration declares command '{}' but '{expected}' was invoked",
            config.command
        );
        return ExitCode::from(EXIT_ERROR as u8);
    }
    let code = runner::run(&config, args.output.as_deref(), args.quiet);
    ExitCode::from(code as u8)
}
