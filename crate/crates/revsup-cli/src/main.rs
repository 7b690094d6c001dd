//! `revsup`: render reverberant scene batches, rank predictability ceilings,
//! screen mixture pairs, audit gradients, and run waveform descent, all from
//! the command line. Outputs are JSON or CSV; exit code 0 means success, 2 a
//! problem the caller can fix in their inputs, 1 a runtime failure.

use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;

#[derive(Parser)]
#[command(name = "revsup", version, about = "Reverberation-supervised separation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a batch of two-channel reverberant scenes to a directory.
    Simulate(commands::SimulateArgs),
    /// Score how well each input kind predicts the right mixture.
    Oracle(commands::OracleArgs),
    /// Screen stereo pairs by cross-channel predictability.
    Select(commands::SelectArgs),
    /// Audit analytic loss gradients against finite differences.
    RasGradCheck(commands::GradCheckArgs),
    /// Run waveform-space descent on one scene and write its trace.
    Optimize(commands::OptimizeArgs),
    /// Re-run the descent recipe with single ingredients flipped.
    Ablate(commands::AblateArgs),
    /// Print one separation metric for a reference/estimate pair.
    Metrics(commands::MetricsArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate(args) => commands::simulate(&args),
        Command::Oracle(args) => commands::oracle(&args),
        Command::Select(args) => commands::select(&args),
        Command::RasGradCheck(args) => commands::grad_check(&args),
        Command::Optimize(args) => commands::optimize(&args),
        Command::Ablate(args) => commands::ablate(&args),
        Command::Metrics(args) => commands::metrics(&args),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            if err.is_validation() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
