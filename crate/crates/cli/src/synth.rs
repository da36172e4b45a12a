use std::path::PathBuf;

use clap::Args;
use tempco::{generate, serialize_stream, SynthConfig, DEFAULT_SIGMA};

use crate::error::CliError;
use crate::io::write_output;

fn defaults() -> SynthConfig<f64> {
    SynthConfig::default()
}

/// Generates a deterministic synthetic logit corpus in the frame JSONL format.
#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output frame JSONL; use - for stdout
    #[arg(long)]
    pub output: PathBuf,

    /// Number of live tracklets
    #[arg(long, default_value_t = defaults().n_live)]
    pub n_live: usize,

    /// Number of attack tracklets
    #[arg(long, default_value_t = defaults().n_attack)]
    pub n_attack: usize,

    /// Frames per tracklet
    #[arg(long, default_value_t = defaults().length)]
    pub length: usize,

    /// Base logit mean for live tracklets
    #[arg(long, default_value_t = defaults().live_mu, allow_negative_numbers = true)]
    pub live_mu: f64,

    /// Base logit mean for attack tracklets
    #[arg(long, default_value_t = defaults().attack_mu, allow_negative_numbers = true)]
    pub attack_mu: f64,

    /// Per-frame logit noise standard deviation
    #[arg(long, default_value_t = DEFAULT_SIGMA)]
    pub sigma: f64,

    /// Per-frame probability of starting an inconsistency spike
    #[arg(long, default_value_t = defaults().spike_prob)]
    pub spike_prob: f64,

    /// Logit displacement toward the opposite class during a spike
    #[arg(long, default_value_t = defaults().spike_shift, allow_negative_numbers = true)]
    pub spike_shift: f64,

    /// Spike duration in frames
    #[arg(long, default_value_t = defaults().spike_len)]
    pub spike_len: usize,

    /// Seed for the deterministic generator
    #[arg(long, default_value_t = defaults().seed)]
    pub seed: u64,
}

impl SynthArgs {
    fn to_config(&self) -> SynthConfig<f64> {
        SynthConfig {
            n_live: self.n_live,
            n_attack: self.n_attack,
            length: self.length,
            live_mu: self.live_mu,
            attack_mu: self.attack_mu,
            sigma: self.sigma,
            spike_prob: self.spike_prob,
            spike_shift: self.spike_shift,
            spike_len: self.spike_len,
            seed: self.seed,
        }
    }
}

pub fn run(args: &SynthArgs) -> Result<(), CliError> {
    let tracklets = generate(&args.to_config())?;
    let out = serialize_stream(&tracklets, None)?;
    write_output(&args.output, &out)
}
