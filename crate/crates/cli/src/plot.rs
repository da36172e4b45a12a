use std::io::Cursor;
use std::path::PathBuf;

use clap::Args;
use tempco::{group_records, logistic, read_records, FrameRecord};

use crate::error::CliError;
use crate::io::{read_input, write_output};
use crate::svg;

/// Renders one smoothed tracklet as a static SVG chart.
#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Smoothed frame JSONL; use - for stdin
    #[arg(long)]
    pub input: PathBuf,

    /// SVG output path; use - for stdout
    #[arg(long)]
    pub output: PathBuf,

    /// Tracklet id to plot
    #[arg(long)]
    pub tracklet: String,
}

pub fn run(args: &PlotArgs) -> Result<(), CliError> {
    let text = read_input(&args.input)?;
    let records = read_records::<f64>(Cursor::new(text))?;
    let mut frames: Vec<(usize, FrameRecord<f64>)> = records
        .into_iter()
        .filter(|(_, r)| r.tracklet_id == args.tracklet)
        .collect();
    if frames.is_empty() {
        return Err(CliError::Validation(format!(
            "tracklet {:?} not found in the input",
            args.tracklet
        )));
    }
    // Full tracklet validation (dense frame indices, consistent labels).
    group_records(&frames)?;
    frames.sort_by_key(|(_, r)| r.t);

    let n = frames.len();
    let mut raw = Vec::with_capacity(n);
    let mut smoothed = Vec::with_capacity(n);
    let mut band_hi = Vec::with_capacity(n);
    let mut band_lo = Vec::with_capacity(n);
    for (line, record) in &frames {
        let (mu_hat, p, var_hat) = match (record.mu_hat, record.p, record.var_hat) {
            (Some(mu), Some(p), Some(var)) => (mu, p, var),
            _ => {
                return Err(CliError::Validation(format!(
                    "line {line}: frame {} of tracklet {:?} has no smoothed fields; \
                     run the smooth command first",
                    record.t, args.tracklet
                )))
            }
        };
        if !mu_hat.is_finite() || !p.is_finite() || !var_hat.is_finite() || var_hat < 0.0 {
            return Err(CliError::Validation(format!(
                "line {line}: frame {} of tracklet {:?} has invalid smoothed fields",
                record.t, args.tracklet
            )));
        }
        raw.push(logistic(record.q));
        smoothed.push(p);
        let spread = var_hat.sqrt();
        band_hi.push(logistic(mu_hat + spread));
        band_lo.push(logistic(mu_hat - spread));
    }

    let chart = svg::Chart {
        tracklet_id: &args.tracklet,
        raw: &raw,
        smoothed: &smoothed,
        band_hi: &band_hi,
        band_lo: &band_lo,
    };
    write_output(&args.output, &svg::render(&chart))
}
