//! `sincinr`: experiment driver for basis diagnostics, INR fitting and
//! dynamical-system recovery.

mod commands;
mod run;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use run::CliError;

#[derive(Parser, Debug)]
#[command(
    name = "sincinr",
    version,
    about = "Sampling-theory diagnostics and sinc-INR experiments"
)]
#[command(
    after_help = "Every flag can also be given as a key in the --config JSON object \
(key = flag name without the leading dashes). Precedence: flag > config > default. \
Exit codes: 0 success, 2 data or domain error, 64 usage error."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Partition-of-unity residual, Riesz bounds and error kernel of a basis kind.
    BasisCheck(commands::BasisCheckArgs),
    /// Approximation error of the scaled shift-space operator against Ω.
    Approx(commands::ApproxArgs),
    /// Fit an INR to a binary PGM image.
    TrainImage(commands::TrainImageArgs),
    /// Fit an INR to a random band-limited 1-D signal.
    TrainSignal(commands::TrainSignalArgs),
    /// Integrate an ODE preset and optionally observe one noisy coordinate.
    Dynamics(commands::DynamicsArgs),
    /// Hankel matrix, truncated SVD and surrogate attractor of a scalar series.
    Hankel(commands::HankelArgs),
    /// Sparse regression of governing equations from a trajectory.
    Sindy(commands::SindyArgs),
    /// Grid search of the activation scale over images and sampling fractions.
    Sweep(commands::SweepArgs),
}

/// Options shared by every subcommand.
#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Output directory, created if missing [default: sincinr-out]
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    /// JSON object of parameter overrides (flags still win)
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// RNG seed for initialization, noise and shuffling [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Format of tabular outputs: csv or json [default: csv]
    #[arg(long)]
    pub format: Option<String>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => run::EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let result = match cli.command {
        Command::BasisCheck(a) => commands::basis_check(a),
        Command::Approx(a) => commands::approx(a),
        Command::TrainImage(a) => commands::train_image(a),
        Command::TrainSignal(a) => commands::train_signal(a),
        Command::Dynamics(a) => commands::dynamics(a),
        Command::Hankel(a) => commands::hankel(a),
        Command::Sindy(a) => commands::sindy(a),
        Command::Sweep(a) => commands::sweep(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(CliError::exit_code(&e) as u8)
        }
    }
}
