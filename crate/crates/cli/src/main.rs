//! `eplsim`: command-line front end writing CSV/JSON artifacts with a run
//! manifest. Exit codes: 0 success, 1 i/o failure, 2 parameter error,
//! 3 truncation overflow.

mod commands;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use error::CliError;
use output::Format;

#[derive(Parser, Debug)]
#[command(name = "eplsim", version, about = "Entangled-photon laser simulator", allow_negative_numbers = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Pair-number cutoff (subcommand-specific default).
    #[arg(long)]
    pub nmax: Option<u32>,
    /// Recorded in the manifest; no subcommand samples randomly.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Multi-pair down-conversion state and pair-number distribution.
    #[command(allow_negative_numbers = true)]
    Pdc(commands::PdcArgs),
    /// Two-pass interference fringe scan over pump-mirror displacement.
    #[command(allow_negative_numbers = true)]
    Fringe(commands::FringeArgs),
    /// Polarizer coincidence curve and visibility.
    #[command(allow_negative_numbers = true)]
    Visibility(commands::VisibilityArgs),
    /// Scripted chain of measurements, loss and swaps.
    #[command(allow_negative_numbers = true)]
    Measure(commands::MeasureArgs),
    /// Cavity round trips: exact trajectory and moment model.
    #[command(allow_negative_numbers = true)]
    Cavity(commands::CavityArgs),
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (common, name, outcome) = match cli.command {
        Command::Pdc(a) => (a.common.clone(), "pdc", commands::pdc(&a)?),
        Command::Fringe(a) => (a.common.clone(), "fringe", commands::fringe(&a)?),
        Command::Visibility(a) => (a.common.clone(), "visibility", commands::visibility(&a)?),
        Command::Measure(a) => (a.common.clone(), "measure", commands::measure(&a)?),
        Command::Cavity(a) => (a.common.clone(), "cavity", commands::cavity(&a)?),
    };
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    let written = output::write_report(&common.out, common.format, name, outcome.parameters, common.seed, outcome.report)?;
    for path in written {
        println!("{}", path.display());
    }
    match outcome.deferred {
        Some(err) => Err(err),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
