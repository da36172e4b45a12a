use std::io::Cursor;
use std::path::PathBuf;

use clap::Args;
use serde::Serialize;
use tempco::{
    grad_check, parse_batch, GradCheckReport, DEFAULT_BETA, DEFAULT_FD_STEP, DEFAULT_FD_TOL,
    DEFAULT_GAMMA,
};

use crate::error::CliError;
use crate::io::{read_input, write_output};

/// Compares analytic loss gradients against central finite differences.
#[derive(Debug, Args)]
pub struct GradCheckArgs {
    /// Batch JSONL input; use - for stdin
    #[arg(long)]
    pub input: PathBuf,

    /// Report JSON output path; use - for stdout
    #[arg(long, default_value = "-")]
    pub output: PathBuf,

    /// Weight of the temporal consistency term
    #[arg(long, default_value_t = DEFAULT_BETA)]
    pub beta: f64,

    /// Weight of the class consistency term
    #[arg(long, default_value_t = DEFAULT_GAMMA)]
    pub gamma: f64,

    /// Central-difference step size
    #[arg(long, default_value_t = DEFAULT_FD_STEP)]
    pub fd_step: f64,

    /// Largest acceptable relative error
    #[arg(long, default_value_t = DEFAULT_FD_TOL)]
    pub tolerance: f64,
}

#[derive(Serialize)]
struct GradCheckOutput {
    passed: bool,
    #[serde(flatten)]
    report: GradCheckReport<f64>,
}

pub fn run(args: &GradCheckArgs) -> Result<(), CliError> {
    let text = read_input(&args.input)?;
    let batch = parse_batch::<f64>(Cursor::new(text))?;
    let report = grad_check(&batch, args.beta, args.gamma, args.fd_step, args.tolerance)?;

    let output = GradCheckOutput {
        passed: report.passed(),
        report: report.clone(),
    };
    let mut json = serde_json::to_string_pretty(&output).expect("report serializes");
    json.push('\n');
    write_output(&args.output, &json)?;

    // The report always lands on disk; a failing comparison still exits
    // non-zero so pipelines notice.
    if !report.passed() {
        let failed: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| c.status.is_failure())
            .map(|c| c.loss)
            .collect();
        return Err(CliError::Validation(format!(
            "gradient check failed for: {}",
            failed.join(", ")
        )));
    }
    Ok(())
}
