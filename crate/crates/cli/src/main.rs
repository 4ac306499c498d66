mod diagonalize_cmd;
mod error;
mod output;
mod parse;
mod report_cmd;
mod ris_cmd;
mod sweep_cmd;
mod verify_cmd;

use clap::{Parser, Subcommand};
use std::process::ExitCode;

/// Robertson uncertainty matrices and intelligent states.
///
/// Exit codes: 0 ok, 1 verification failed, 2 usage or input error,
/// 3 non-normalizable parameters, 4 truncation too small.
#[derive(Debug, Parser)]
#[command(name = "robertson", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Construct an intelligent state and report its uncertainty matrices.
    Ris(ris_cmd::RisArgs),
    /// Uncertainty report for a given or seeded random state.
    Report(report_cmd::ReportArgs),
    /// Diagonalize a symmetric matrix read from CSV.
    Diagonalize(diagonalize_cmd::DiagonalizeArgs),
    /// Parameter sweep, one row per grid point.
    Sweep(sweep_cmd::SweepArgs),
    /// Run the seeded invariant suite.
    Verify(verify_cmd::VerifyArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Ris(a) => ris_cmd::run(a),
        Command::Report(a) => report_cmd::run(a),
        Command::Diagonalize(a) => diagonalize_cmd::run(a),
        Command::Sweep(a) => sweep_cmd::run(a),
        Command::Verify(a) => verify_cmd::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("robertson: {e}");
            e.exit_code()
        }
    }
}
