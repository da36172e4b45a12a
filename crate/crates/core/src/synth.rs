//! Synthetic logit streams for demos, benchmarks and end-to-end tests.
//!
//! Each tracklet draws i.i.d. Gaussian logits around its class mean and
//! occasionally suffers a short "spike": a burst of `spike_len` frames
//! shifted toward the opposite class, imitating the flickering
//! misclassifications a per-frame model produces under motion blur or odd
//! pose. Spikes are exactly the transients temporal smoothing is meant to
//! absorb, so the generator keeps them on by default.
//!
//! Generation is deterministic: every tracklet gets its own counter-based
//! RNG stream derived from the corpus seed and the tracklet ordinal, so a
//! corpus is reproducible and unaffected by how many tracklets precede a
//! given one... as long as the class counts stay fixed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::real::{logistic, Real};
use crate::stream::{ClassLabel, LogitFrame, Tracklet};

/// Noise scale whose live-only corpus (all other knobs at their defaults)
/// lands the raw probability spread near 0.2, the regime where per-frame
/// scores are visibly unstable. Frozen from `calibrate_sigma` at target 0.2.
pub const DEFAULT_SIGMA: f64 = 1.2867;

/// Attack type attached to every synthetic attack tracklet.
pub const SYNTH_ATTACK_TYPE: &str = "synthetic";

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("invalid synth config: {0}")]
    BadConfig(String),
    #[error("no sigma in [0, {limit}] reaches probability std {target} (closest {closest})")]
    UnattainableTarget {
        target: f64,
        closest: f64,
        limit: f64,
    },
}

/// Corpus layout and noise model. `Default` gives 25 live and 25 attack
/// tracklets of 200 frames each with spikes on. The default spike hazard
/// stays low enough that spikes alone keep the live probability spread
/// under 0.2, leaving `calibrate_sigma` room to hit that target; at 0.05
/// and above the spike mixture already exceeds it on its own.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig<R: Real = f64> {
    pub n_live: usize,
    pub n_attack: usize,
    /// Frames per tracklet.
    pub length: usize,
    pub live_mu: R,
    pub attack_mu: R,
    /// Gaussian noise scale on the logit.
    pub sigma: R,
    /// Per-frame chance of starting a spike (checked only outside spikes).
    pub spike_prob: f64,
    /// Logit shift toward the opposite class while a spike is active;
    /// a negative value flips the spike direction (used to mirror corpora).
    pub spike_shift: R,
    /// Frames a spike lasts, trigger frame included.
    pub spike_len: usize,
    pub seed: u64,
}

impl<R: Real> Default for SynthConfig<R> {
    fn default() -> Self {
        SynthConfig {
            n_live: 25,
            n_attack: 25,
            length: 200,
            live_mu: R::of(2.5),
            attack_mu: R::of(-2.5),
            sigma: R::of(DEFAULT_SIGMA),
            spike_prob: 0.03,
            spike_shift: R::of(4.0),
            spike_len: 2,
            seed: 7,
        }
    }
}

impl<R: Real> SynthConfig<R> {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.length == 0 {
            return Err(SynthError::BadConfig("length must be at least 1".into()));
        }
        if !self.live_mu.is_finite() || !self.attack_mu.is_finite() {
            return Err(SynthError::BadConfig("class means must be finite".into()));
        }
        if !self.sigma.is_finite() || self.sigma < R::zero() {
            return Err(SynthError::BadConfig(
                "sigma must be finite and non-negative".into(),
            ));
        }
        if !self.spike_prob.is_finite() || !(0.0..=1.0).contains(&self.spike_prob) {
            return Err(SynthError::BadConfig(
                "spike_prob must lie in [0, 1]".into(),
            ));
        }
        if !self.spike_shift.is_finite() {
            return Err(SynthError::BadConfig("spike_shift must be finite".into()));
        }
        if self.spike_len == 0 {
            return Err(SynthError::BadConfig(
                "spike_len must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

fn generate_tracklet<R: Real>(
    config: &SynthConfig<R>,
    id: String,
    live: bool,
    stream: u64,
) -> Tracklet<R> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(stream);
    let mu = if live { config.live_mu } else { config.attack_mu };
    // Spikes push toward the other class: down for live, up for attack.
    let shift = if live {
        -config.spike_shift
    } else {
        config.spike_shift
    };
    let mut remaining = 0usize;
    let mut frames = Vec::with_capacity(config.length);
    for t in 0..config.length {
        // The Gaussian draw happens every frame even when sigma is 0, so
        // the draw sequence (and thus the spike pattern) is identical
        // across sigmas. Calibration depends on that.
        let z: f64 = rng.sample(StandardNormal);
        let mut q = mu + config.sigma * R::of(z);
        if remaining == 0 && rng.random::<f64>() < config.spike_prob {
            remaining = config.spike_len;
        }
        if remaining > 0 {
            q = q + shift;
            remaining -= 1;
        }
        frames.push(LogitFrame {
            tracklet_id: id.clone(),
            t,
            q,
            embedding: None,
        });
    }
    let label = if live {
        ClassLabel::live()
    } else {
        ClassLabel::attack(SYNTH_ATTACK_TYPE)
    };
    Tracklet::new(id, label, frames).expect("generated frames are valid by construction")
}

/// Generates the corpus: live tracklets `live-0000..`, then attack
/// tracklets `attack-0000..`. RNG stream ordinals run over lives first
/// and attacks after, so for a fixed config every tracklet is independent
/// of the others.
pub fn generate<R: Real>(config: &SynthConfig<R>) -> Result<Vec<Tracklet<R>>, SynthError> {
    config.validate()?;
    let mut tracklets = Vec::with_capacity(config.n_live + config.n_attack);
    for i in 0..config.n_live {
        tracklets.push(generate_tracklet(
            config,
            format!("live-{i:04}"),
            true,
            i as u64,
        ));
    }
    for j in 0..config.n_attack {
        tracklets.push(generate_tracklet(
            config,
            format!("attack-{j:04}"),
            false,
            (config.n_live + j) as u64,
        ));
    }
    Ok(tracklets)
}

/// Population standard deviation of logistic(q) pooled over all frames.
/// `None` with fewer than two frames.
pub fn probability_std<R: Real>(tracklets: &[Tracklet<R>]) -> Option<R> {
    let probs: Vec<R> = tracklets
        .iter()
        .flat_map(|tr| tr.frames().iter().map(|f| logistic(f.q)))
        .collect();
    if probs.len() < 2 {
        return None;
    }
    // A constant stream must report exactly zero spread; the two-pass
    // formula below can leave rounding dust behind.
    if probs.iter().all(|&p| p == probs[0]) {
        return Some(R::zero());
    }
    let n = R::of_usize(probs.len());
    let mean = probs.iter().fold(R::zero(), |acc, &p| acc + p) / n;
    let var = probs
        .iter()
        .fold(R::zero(), |acc, &p| acc + (p - mean) * (p - mean))
        / n;
    Some(var.sqrt())
}

const SIGMA_LIMIT: f64 = 64.0;
const SIGMA_GRID_STEP: f64 = 0.25;

/// Probability std of the live-only calibration corpus at one sigma.
fn live_std_at<R: Real>(template: &SynthConfig<R>, sigma: f64) -> f64 {
    let corpus = SynthConfig {
        n_live: template.n_live.max(100),
        n_attack: 0,
        length: template.length.max(200),
        sigma: R::of(sigma),
        ..template.clone()
    };
    let tracklets = generate(&corpus).expect("validated template");
    probability_std(&tracklets)
        .expect("calibration corpus has many frames")
        .to_f64()
        .expect("std fits f64")
}

/// Finds a sigma whose live-only corpus has probability std `target`.
///
/// The spread is not monotone in sigma: spikes put a floor under it, and
/// around moderate sigmas the logistic squashes the noise enough that the
/// spread can dip before growing again. So the search scans a grid over
/// [0, 64] for the first sign change of `std(sigma) - target` and bisects
/// inside that bracket. The corpus is widened to at least 100 tracklets of
/// 200 frames (spikes and seed as configured) so the estimate is stable.
///
/// Fails with [`SynthError::UnattainableTarget`] when no grid bracket
/// exists or the bisected sigma misses the target by more than 5%.
pub fn calibrate_sigma<R: Real>(
    template: &SynthConfig<R>,
    target: f64,
) -> Result<R, SynthError> {
    template.validate()?;
    if !target.is_finite() || target < 0.0 {
        return Err(SynthError::BadConfig(
            "target std must be finite and non-negative".into(),
        ));
    }
    let f = |sigma: f64| live_std_at(template, sigma);

    let mut closest = f64::INFINITY;
    let mut closest_gap = f64::INFINITY;
    let mut bracket: Option<(f64, f64, f64, f64)> = None;
    let steps = (SIGMA_LIMIT / SIGMA_GRID_STEP) as usize;
    let mut prev: Option<(f64, f64)> = None;
    for i in 0..=steps {
        let sigma = i as f64 * SIGMA_GRID_STEP;
        let g = f(sigma) - target;
        if g.abs() < closest_gap {
            closest_gap = g.abs();
            closest = sigma;
        }
        if let Some((ps, pg)) = prev {
            if pg == 0.0 {
                bracket = Some((ps, ps, 0.0, 0.0));
                break;
            }
            if pg.signum() != g.signum() {
                bracket = Some((ps, sigma, pg, g));
                break;
            }
        }
        if g == 0.0 {
            bracket = Some((sigma, sigma, 0.0, 0.0));
            break;
        }
        prev = Some((sigma, g));
    }

    let sigma = match bracket {
        Some((lo, hi, _, _)) if lo == hi => lo,
        Some((mut lo, mut hi, mut glo, _)) => {
            for _ in 0..64 {
                let mid = 0.5 * (lo + hi);
                let gm = f(mid) - target;
                if gm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if gm.signum() == glo.signum() {
                    lo = mid;
                    glo = gm;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        }
        None => {
            return Err(SynthError::UnattainableTarget {
                target,
                closest: f(closest),
                limit: SIGMA_LIMIT,
            })
        }
    };

    let achieved = f(sigma);
    let tolerance = 0.05 * target;
    if (achieved - target).abs() > tolerance {
        return Err(SynthError::UnattainableTarget {
            target,
            closest: achieved,
            limit: SIGMA_LIMIT,
        });
    }
    Ok(R::of(sigma))
}
