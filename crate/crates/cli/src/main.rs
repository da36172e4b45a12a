mod error;
mod eval;
mod flags;
mod gradcheck;
mod io;
mod plot;
mod smooth;
mod svg;
mod synth;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use crate::error::CliError;

/// Batch front end for the temporal-consistency toolkit: generate, smooth,
/// evaluate and plot streaming liveness scores.
#[derive(Debug, Parser)]
#[command(name = "tempco", version, arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Smooth a raw logit stream
    Smooth(smooth::SmoothArgs),
    /// Score a stream and report frame- and segment-level error rates
    Eval(eval::EvalArgs),
    /// Generate a synthetic logit corpus
    Synth(synth::SynthArgs),
    /// Check analytic loss gradients against finite differences
    GradCheck(gradcheck::GradCheckArgs),
    /// Render one smoothed tracklet as an SVG chart
    Plot(plot::PlotArgs),
}

/// TEMPCO_THREADS caps the rayon pool. Results never depend on the degree
/// of parallelism, only wall time does.
fn init_threads() -> Result<(), CliError> {
    let value = match std::env::var("TEMPCO_THREADS") {
        Err(std::env::VarError::NotPresent) => return Ok(()),
        Err(e) => return Err(CliError::Validation(format!("TEMPCO_THREADS: {e}"))),
        Ok(v) => v,
    };
    let threads: usize = value.trim().parse().unwrap_or(0);
    if threads == 0 {
        return Err(CliError::Validation(format!(
            "TEMPCO_THREADS must be a positive integer, got {value:?}"
        )));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Validation(format!("TEMPCO_THREADS: {e}")))
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Smooth(args) => smooth::run(args),
        Command::Eval(args) => eval::run(args),
        Command::Synth(args) => synth::run(args),
        Command::GradCheck(args) => gradcheck::run(args),
        Command::Plot(args) => plot::run(args),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Explicit --help/--version requests succeed; anything else is
            // a usage problem and exits as a validation error.
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = init_threads().and_then(|()| run(&cli)) {
        eprintln!("tempco: {e}");
        std::process::exit(e.exit_code());
    }
}
