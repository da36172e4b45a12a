use std::io::Cursor;
use std::path::PathBuf;

use clap::Args;
use rayon::prelude::*;
use serde::Serialize;
use tempco::{
    calibrate_threshold, csv_report, evaluate_segments, parse_stream, run_filter, EvalReport,
    ScoredSample, SegmentReport,
};

use crate::error::CliError;
use crate::flags::{parse_policy, FilterFlags, PolicyArg};
use crate::io::{read_input, write_output};

/// Scores a stream at frame and segment level and reports the error rates.
#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Input frame JSONL; use - for stdin
    #[arg(long)]
    pub input: PathBuf,

    /// Report JSON output path; use - for stdout
    #[arg(long)]
    pub output: PathBuf,

    /// Also write the report as CSV to this path
    #[arg(long)]
    pub csv: Option<PathBuf>,

    #[command(flatten)]
    pub filter: FilterFlags,

    /// Segment lengths K, comma separated
    #[arg(long, value_delimiter = ',', default_value = "1,3,5,10,15,30")]
    pub segments: Vec<usize>,

    /// Operating threshold policy: eer, fpr:F or fixed:V
    #[arg(long, value_parser = parse_policy, default_value = "eer")]
    pub threshold_policy: PolicyArg,
}

#[derive(Serialize)]
struct EvalOutput<'a> {
    method: &'a str,
    threshold_policy: String,
    threshold: f64,
    /// True when an FPR budget was unreachable and the reject-all sentinel
    /// threshold is in force.
    saturated: bool,
    frame: &'a EvalReport<f64>,
    segments: &'a [SegmentReport<f64>],
}

pub fn run(args: &EvalArgs) -> Result<(), CliError> {
    let text = read_input(&args.input)?;
    let tracklets = parse_stream::<f64>(Cursor::new(text))?;
    let config = args.filter.to_config();

    // One sample per frame, scored by its smoothed probability. The
    // per-tracklet work parallelizes; collect keeps the input order.
    let per_tracklet: Vec<Vec<ScoredSample<f64>>> = tracklets
        .par_iter()
        .map(|tracklet| -> Result<Vec<ScoredSample<f64>>, CliError> {
            let smoothed = run_filter(tracklet, &config)?;
            smoothed
                .iter()
                .map(|frame| {
                    ScoredSample::new(frame.p, tracklet.label().clone(), tracklet.id(), frame.t)
                        .map_err(CliError::from)
                })
                .collect()
        })
        .collect::<Result<_, _>>()?;
    let frame_samples: Vec<ScoredSample<f64>> = per_tracklet.into_iter().flatten().collect();

    // The threshold calibrates on frame scores and then applies unchanged
    // to every segment length, so rows are comparable across K.
    let calibrated = calibrate_threshold(&frame_samples, args.threshold_policy.to_policy())?;
    let frame_report = EvalReport::compute(&frame_samples, calibrated.threshold)?;
    let segment_reports =
        evaluate_segments(&tracklets, &config, &args.segments, calibrated.threshold)?;

    let output = EvalOutput {
        method: config.method.name(),
        threshold_policy: args.threshold_policy.to_string(),
        threshold: calibrated.threshold,
        saturated: calibrated.saturated,
        frame: &frame_report,
        segments: &segment_reports,
    };
    let mut json = serde_json::to_string_pretty(&output).expect("report serializes");
    json.push('\n');
    let csv = args
        .csv
        .as_ref()
        .map(|_| csv_report(Some(&frame_report), &segment_reports));

    write_output(&args.output, &json)?;
    if let (Some(path), Some(csv)) = (&args.csv, csv) {
        write_output(path, &csv)?;
    }
    Ok(())
}
