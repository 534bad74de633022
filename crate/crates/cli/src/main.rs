mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::Overrides;

/// Exit status for bad input, configuration or files.
const EXIT_CONFIG: u8 = 2;
/// Exit status for numerical failures (rank deficiency, infeasibility, ...).
const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "pareto-forge", version, about = "Multi-objective optimization of face-milling parameters")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit or load the response models and write diagnostics.
    Fit(Overrides),
    /// Check the experiment data against the variable bounds.
    Validate(Overrides),
    /// Run one routine (or all) and write fronts, plots and outcomes.
    Optimize(Overrides),
    /// Merge front CSV files into a combined front and plot.
    Front {
        #[command(flatten)]
        overrides: Overrides,
        /// Front CSV files; defaults to every front_<method>.csv in the output directory.
        inputs: Vec<PathBuf>,
    },
    /// Run all routines and write the solver effort report.
    Compare(Overrides),
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Fit(o) => commands::cmd_fit(&o.resolve()?),
        Command::Validate(o) => commands::cmd_validate(&o.resolve()?),
        Command::Optimize(o) => commands::cmd_optimize(&o.resolve()?),
        Command::Front { overrides, inputs } => commands::cmd_front(&overrides.resolve()?, &inputs),
        Command::Compare(o) => commands::cmd_compare(&o.resolve()?),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let numerical = err
        .chain()
        .filter_map(|e| e.downcast_ref::<pareto_forge::Error>())
        .any(|e| e.is_numerical());
    if numerical {
        EXIT_NUMERICAL
    } else {
        EXIT_CONFIG
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
