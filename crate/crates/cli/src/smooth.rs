use std::collections::HashMap;
use std::io::Cursor;
use std::path::PathBuf;

use clap::Args;
use rayon::prelude::*;
use tempco::{group_records, read_records, run_filter, SmoothedFrame};

use crate::error::CliError;
use crate::flags::FilterFlags;
use crate::io::{read_input, write_output};

/// Adds mu_hat, p and var_hat to every frame of a raw logit stream.
#[derive(Debug, Args)]
pub struct SmoothArgs {
    /// Input frame JSONL; use - for stdin
    #[arg(long)]
    pub input: PathBuf,

    /// Output JSONL with smoothed fields added; use - for stdout
    #[arg(long)]
    pub output: PathBuf,

    #[command(flatten)]
    pub filter: FilterFlags,
}

pub fn run(args: &SmoothArgs) -> Result<(), CliError> {
    let text = read_input(&args.input)?;
    let records = read_records::<f64>(Cursor::new(text))?;
    let tracklets = group_records(&records)?;
    let config = args.filter.to_config();

    let smoothed: Vec<Vec<SmoothedFrame<f64>>> = tracklets
        .par_iter()
        .map(|tracklet| run_filter(tracklet, &config))
        .collect::<Result<_, _>>()?;

    // Grouping reordered frames per tracklet; a lookup keyed by
    // (tracklet, t) lets the output keep the input line order.
    let mut by_frame: HashMap<(&str, u64), &SmoothedFrame<f64>> = HashMap::new();
    for (tracklet, frames) in tracklets.iter().zip(&smoothed) {
        for frame in frames {
            by_frame.insert((tracklet.id(), frame.t as u64), frame);
        }
    }

    let mut out = String::with_capacity(records.len() * 160);
    for (_, record) in &records {
        let frame = by_frame[&(record.tracklet_id.as_str(), record.t)];
        let mut record = record.clone();
        record.mu_hat = Some(frame.mu_hat);
        record.p = Some(frame.p);
        record.var_hat = Some(frame.var_hat);
        out.push_str(&serde_json::to_string(&record).expect("record serializes"));
        out.push('\n');
    }
    write_output(&args.output, &out)
}
