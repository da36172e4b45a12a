//! Presentation-attack evaluation: error rates, ROC/EER, operating-point
//! calibration and the segment-level protocol.
//!
//! Scores are liveness probabilities in [0, 1]; the decision rule is
//! "live iff score >= threshold". Live samples are the positives, so
//!
//! * APCER: fraction of attack samples accepted as live (score >= threshold),
//! * BPCER: fraction of live samples rejected (score < threshold),
//! * ACER:  (APCER + BPCER) / 2,
//!
//! with APCER also broken down per attack type. The worst-type aggregate
//! favoured by the ISO reporting style is available via
//! [`EvalReport::worst_type_apcer`].
//!
//! The ROC sweep visits every distinct score plus an all-accept sentinel
//! below the minimum and a reject-all sentinel above the maximum. EER is
//! read off at the FPR/FNR crossing with linear interpolation between
//! adjacent sweep points. FNR@FPR targets pick, for each budget, the most
//! permissive sweep threshold whose FPR still fits the budget (no
//! interpolation), falling back to 1.0 when only the reject-all sentinel
//! complies.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::filter::{run_filter, FilterConfig, FilterError};
use crate::real::Real;
use crate::stream::{ClassLabel, LogitFrame, StreamError, Tracklet};

/// FPR budgets reported by default, strictest first.
pub const FPR_TARGETS: [f64; 5] = [1e-5, 1e-4, 1e-3, 1e-2, 1e-1];

/// Threshold guaranteed to reject every sample (scores live in [0, 1]).
/// Returned by the FPR-target calibration when no real operating point
/// fits the budget.
pub const REJECT_ALL_THRESHOLD: f64 = 2.0;

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("no {class} samples: metric is undefined")]
    MissingClass { class: &'static str },
    #[error("sample {tracklet:?} frame {t}: score {message}")]
    BadScore {
        tracklet: String,
        t: usize,
        message: String,
    },
    #[error("threshold must be finite")]
    NonFiniteThreshold,
    #[error("fixed threshold must lie in [0, 1]")]
    ThresholdOutOfRange,
    #[error("FPR target must lie in [0, 1]")]
    FprTargetOutOfRange,
    #[error("segment length K must be at least 1")]
    InvalidSegmentLength,
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error(transparent)]
    Stream(#[from] StreamError),
}

/// One scored sample (a frame or a segment) with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredSample<R: Real = f64> {
    score: R,
    label: ClassLabel,
    tracklet_id: String,
    t: usize,
}

impl<R: Real> ScoredSample<R> {
    pub fn new(
        score: R,
        label: ClassLabel,
        tracklet_id: impl Into<String>,
        t: usize,
    ) -> Result<Self, MetricsError> {
        let tracklet_id = tracklet_id.into();
        if !score.is_finite() || score < R::zero() || score > R::one() {
            return Err(MetricsError::BadScore {
                tracklet: tracklet_id,
                t,
                message: format!("{score} outside [0, 1]"),
            });
        }
        Ok(ScoredSample {
            score,
            label,
            tracklet_id,
            t,
        })
    }

    pub fn score(&self) -> R {
        self.score
    }

    pub fn label(&self) -> &ClassLabel {
        &self.label
    }

    pub fn tracklet_id(&self) -> &str {
        &self.tracklet_id
    }

    pub fn t(&self) -> usize {
        self.t
    }
}

/// Error rates at one fixed threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Confusion<R: Real = f64> {
    pub apcer: R,
    pub bpcer: R,
    pub acer: R,
    pub apcer_by_type: BTreeMap<String, R>,
    pub n_live: usize,
    pub n_attack: usize,
}

fn class_counts<R: Real>(samples: &[ScoredSample<R>]) -> Result<(usize, usize), MetricsError> {
    let n_live = samples.iter().filter(|s| s.label.is_live()).count();
    let n_attack = samples.len() - n_live;
    if n_live == 0 {
        return Err(MetricsError::MissingClass { class: "live" });
    }
    if n_attack == 0 {
        return Err(MetricsError::MissingClass { class: "attack" });
    }
    Ok((n_live, n_attack))
}

/// Counts errors at `threshold` under the "live iff score >= threshold"
/// rule. Needs at least one sample of each class.
pub fn confusion_at<R: Real>(
    samples: &[ScoredSample<R>],
    threshold: R,
) -> Result<Confusion<R>, MetricsError> {
    if !threshold.is_finite() {
        return Err(MetricsError::NonFiniteThreshold);
    }
    let (n_live, n_attack) = class_counts(samples)?;
    let mut live_rejected = 0usize;
    let mut attack_accepted = 0usize;
    let mut per_type_total: BTreeMap<String, usize> = BTreeMap::new();
    let mut per_type_accepted: BTreeMap<String, usize> = BTreeMap::new();
    for sample in samples {
        let accepted = sample.score >= threshold;
        match &sample.label {
            ClassLabel::Live => {
                if !accepted {
                    live_rejected += 1;
                }
            }
            ClassLabel::Attack { attack_type } => {
                *per_type_total.entry(attack_type.clone()).or_default() += 1;
                if accepted {
                    attack_accepted += 1;
                    *per_type_accepted.entry(attack_type.clone()).or_default() += 1;
                }
            }
        }
    }
    let apcer = R::of_usize(attack_accepted) / R::of_usize(n_attack);
    let bpcer = R::of_usize(live_rejected) / R::of_usize(n_live);
    let apcer_by_type = per_type_total
        .iter()
        .map(|(ty, total)| {
            let accepted = per_type_accepted.get(ty).copied().unwrap_or(0);
            (ty.clone(), R::of_usize(accepted) / R::of_usize(*total))
        })
        .collect();
    Ok(Confusion {
        apcer,
        bpcer,
        acer: (apcer + bpcer) / R::of(2.0),
        apcer_by_type,
        n_live,
        n_attack,
    })
}

/// One operating point of the ROC sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RocPoint<R: Real = f64> {
    pub threshold: R,
    pub fpr: R,
    pub fnr: R,
}

/// FNR achieved within one FPR budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FnrAtFpr<R: Real = f64> {
    pub fpr: R,
    pub fnr: R,
}

/// Full threshold sweep with EER and the FNR@FPR table.
#[derive(Debug, Clone, PartialEq)]
pub struct RocAnalysis<R: Real = f64> {
    pub points: Vec<RocPoint<R>>,
    pub eer: R,
    /// Threshold at the FPR/FNR crossing; the midpoint of the equality gap
    /// when the classes separate perfectly.
    pub eer_threshold: R,
    pub fnr_at_fpr: Vec<FnrAtFpr<R>>,
}

/// Sweeps all distinct scores (plus sentinels) and derives EER and FNR@FPR.
pub fn roc_and_eer<R: Real>(samples: &[ScoredSample<R>]) -> Result<RocAnalysis<R>, MetricsError> {
    let (n_live, n_attack) = class_counts(samples)?;
    let live_total = R::of_usize(n_live);
    let attack_total = R::of_usize(n_attack);

    let mut scores: Vec<R> = samples.iter().map(|s| s.score).collect();
    scores.sort_by(|a, b| a.partial_cmp(b).expect("finite scores"));
    scores.dedup();

    // Class counts at each distinct score, then prefix sums give the
    // confusion at every sweep threshold in one pass.
    let mut lives_at = vec![0usize; scores.len()];
    let mut attacks_at = vec![0usize; scores.len()];
    for sample in samples {
        let k = scores
            .binary_search_by(|s| s.partial_cmp(&sample.score).expect("finite scores"))
            .expect("score present");
        if sample.label.is_live() {
            lives_at[k] += 1;
        } else {
            attacks_at[k] += 1;
        }
    }

    let mut points = Vec::with_capacity(scores.len() + 2);
    if scores[0] > R::zero() {
        // All-accept sentinel below every score.
        points.push(RocPoint {
            threshold: R::zero(),
            fpr: R::one(),
            fnr: R::zero(),
        });
    }
    let mut lives_below = 0usize;
    let mut attacks_below = 0usize;
    for (k, &threshold) in scores.iter().enumerate() {
        points.push(RocPoint {
            threshold,
            fpr: R::of_usize(n_attack - attacks_below) / attack_total,
            fnr: R::of_usize(lives_below) / live_total,
        });
        lives_below += lives_at[k];
        attacks_below += attacks_at[k];
    }
    // Reject-all sentinel above every score.
    points.push(RocPoint {
        threshold: R::of(REJECT_ALL_THRESHOLD),
        fpr: R::zero(),
        fnr: R::one(),
    });

    // g = fpr - fnr is non-increasing along the sweep, starting at +1 and
    // ending at -1, so a sign change always exists.
    let gap = |p: &RocPoint<R>| p.fpr - p.fnr;
    let mut j = points.len() - 1;
    for (k, point) in points.iter().enumerate() {
        if gap(point) <= R::zero() {
            j = k;
            break;
        }
    }
    debug_assert!(j >= 1, "the all-accept end of the sweep has g = 1");
    let (eer, eer_threshold) = if gap(&points[j]) == R::zero() {
        // Exact equality, possibly over a run of sweep points; every point
        // of the run shares one rate. The threshold gap spans from just
        // above the previous sweep point to the end of the run.
        let mut k = j;
        while k + 1 < points.len() && gap(&points[k + 1]) == R::zero() {
            k += 1;
        }
        let eer = points[j].fpr;
        let threshold =
            (points[j - 1].threshold + points[k].threshold) / R::of(2.0);
        (eer, threshold)
    } else {
        let i = j - 1;
        let gi = gap(&points[i]);
        let gj = gap(&points[j]);
        let lambda = gi / (gi - gj);
        let eer = points[i].fpr + lambda * (points[j].fpr - points[i].fpr);
        let threshold =
            points[i].threshold + lambda * (points[j].threshold - points[i].threshold);
        (eer, threshold)
    };

    let fnr_at_fpr = FPR_TARGETS
        .iter()
        .map(|&target| {
            let target_r = R::of(target);
            let point = points
                .iter()
                .find(|p| p.fpr <= target_r)
                .expect("reject-all sentinel has fpr 0");
            FnrAtFpr {
                fpr: target_r,
                fnr: point.fnr,
            }
        })
        .collect();

    Ok(RocAnalysis {
        points,
        eer,
        eer_threshold,
        fnr_at_fpr,
    })
}

/// How the operating threshold is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdPolicy<R: Real = f64> {
    /// Threshold at the FPR/FNR crossing (midpoint of the gap when the
    /// classes separate).
    EerPoint,
    /// Most permissive threshold whose FPR stays within the budget.
    FprTarget(R),
    /// Use the given threshold as-is.
    Fixed(R),
}

/// A calibrated threshold. `saturated` marks an unachievable FPR target,
/// in which case the reject-all sentinel is returned.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CalibratedThreshold<R: Real = f64> {
    pub threshold: R,
    pub saturated: bool,
}

/// Resolves a threshold policy against a scored sample set.
pub fn calibrate_threshold<R: Real>(
    samples: &[ScoredSample<R>],
    policy: ThresholdPolicy<R>,
) -> Result<CalibratedThreshold<R>, MetricsError> {
    match policy {
        ThresholdPolicy::Fixed(v) => {
            if !v.is_finite() {
                return Err(MetricsError::NonFiniteThreshold);
            }
            if v < R::zero() || v > R::one() {
                return Err(MetricsError::ThresholdOutOfRange);
            }
            Ok(CalibratedThreshold {
                threshold: v,
                saturated: false,
            })
        }
        ThresholdPolicy::EerPoint => {
            let analysis = roc_and_eer(samples)?;
            Ok(CalibratedThreshold {
                threshold: analysis.eer_threshold,
                saturated: false,
            })
        }
        ThresholdPolicy::FprTarget(f) => {
            if !f.is_finite() || f < R::zero() || f > R::one() {
                return Err(MetricsError::FprTargetOutOfRange);
            }
            let analysis = roc_and_eer(samples)?;
            let reject_all = R::of(REJECT_ALL_THRESHOLD);
            // Only real operating points count; the reject-all sentinel
            // trivially has FPR 0 and signals an unachievable budget.
            let chosen = analysis
                .points
                .iter()
                .find(|p| p.fpr <= f && p.threshold < reject_all);
            Ok(match chosen {
                Some(p) => CalibratedThreshold {
                    threshold: p.threshold,
                    saturated: false,
                },
                None => CalibratedThreshold {
                    threshold: reject_all,
                    saturated: true,
                },
            })
        }
    }
}

/// Frame- or segment-level evaluation report at one threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport<R: Real = f64> {
    pub threshold: R,
    pub apcer: R,
    pub bpcer: R,
    pub acer: R,
    pub eer: R,
    pub fnr_at_fpr: Vec<FnrAtFpr<R>>,
    pub apcer_by_type: BTreeMap<String, R>,
    pub n_live: usize,
    pub n_attack: usize,
}

impl<R: Real> EvalReport<R> {
    /// Computes the full report for one sample set at one threshold.
    pub fn compute(
        samples: &[ScoredSample<R>],
        threshold: R,
    ) -> Result<EvalReport<R>, MetricsError> {
        let confusion = confusion_at(samples, threshold)?;
        let analysis = roc_and_eer(samples)?;
        Ok(EvalReport {
            threshold,
            apcer: confusion.apcer,
            bpcer: confusion.bpcer,
            acer: confusion.acer,
            eer: analysis.eer,
            fnr_at_fpr: analysis.fnr_at_fpr,
            apcer_by_type: confusion.apcer_by_type,
            n_live: confusion.n_live,
            n_attack: confusion.n_attack,
        })
    }

    /// Worst per-type APCER, the ISO-style max-over-types aggregate.
    pub fn worst_type_apcer(&self) -> Option<R> {
        self.apcer_by_type
            .values()
            .copied()
            .fold(None, |acc, v| match acc {
                Some(a) if a >= v => Some(a),
                _ => Some(v),
            })
    }
}

/// Splits a tracklet into segments of `k` consecutive frames. The final
/// shorter remainder is kept. Segment ids append `#ordinal` to the parent
/// id and frame indices restart at 0, so each segment is a valid tracklet.
pub fn segment_split<R: Real>(
    tracklet: &Tracklet<R>,
    k: usize,
) -> Result<Vec<Tracklet<R>>, MetricsError> {
    if k == 0 {
        return Err(MetricsError::InvalidSegmentLength);
    }
    let mut segments = Vec::with_capacity(tracklet.len().div_ceil(k));
    for (ordinal, chunk) in tracklet.frames().chunks(k).enumerate() {
        let id = format!("{}#{}", tracklet.id(), ordinal);
        let frames = chunk
            .iter()
            .enumerate()
            .map(|(i, frame)| LogitFrame {
                tracklet_id: id.clone(),
                t: i,
                q: frame.q,
                embedding: frame.embedding.clone(),
            })
            .collect();
        segments.push(Tracklet::new(id, tracklet.label().clone(), frames)?);
    }
    Ok(segments)
}

/// Segment-level report for one segment length.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentReport<R: Real = f64> {
    pub segment_length: usize,
    pub n_segments: usize,
    pub report: EvalReport<R>,
}

/// Runs the segment protocol: for each requested `K`, every tracklet is
/// split into K-frame segments, the filter restarts on each segment, and
/// the segment is scored by its final smoothed probability. `ks` is
/// deduplicated and reports come back in increasing K.
pub fn evaluate_segments<R: Real>(
    tracklets: &[Tracklet<R>],
    config: &FilterConfig<R>,
    ks: &[usize],
    threshold: R,
) -> Result<Vec<SegmentReport<R>>, MetricsError> {
    let mut ks: Vec<usize> = ks.to_vec();
    ks.sort_unstable();
    ks.dedup();
    if ks.contains(&0) {
        return Err(MetricsError::InvalidSegmentLength);
    }
    let mut reports = Vec::with_capacity(ks.len());
    for &k in &ks {
        let mut samples = Vec::new();
        for tracklet in tracklets {
            for segment in segment_split(tracklet, k)? {
                let smoothed = run_filter(&segment, config)?;
                let last = smoothed.last().expect("segments are non-empty");
                samples.push(ScoredSample::new(
                    last.p,
                    segment.label().clone(),
                    segment.id(),
                    last.t,
                )?);
            }
        }
        reports.push(SegmentReport {
            segment_length: k,
            n_segments: samples.len(),
            report: EvalReport::compute(&samples, threshold)?,
        });
    }
    Ok(reports)
}

/// Formats one FPR target the way the CSV header spells it (1e-5, ..., 1e-1).
pub fn fpr_target_label(target: f64) -> String {
    format!("{target:e}")
}

/// Renders reports as CSV with the fixed column order
/// `K,threshold,apcer,bpcer,acer,eer` followed by the FNR@FPR columns,
/// strictest budget first. The frame-level report, when given, appears as
/// the `K = 0` row. Numbers are printed with full round-trip precision.
pub fn csv_report<R: Real>(
    frame: Option<&EvalReport<R>>,
    segments: &[SegmentReport<R>],
) -> String {
    let mut out = String::from("K,threshold,apcer,bpcer,acer,eer");
    for target in FPR_TARGETS {
        out.push_str(&format!(",fnr@fpr={}", fpr_target_label(target)));
    }
    out.push('\n');
    let mut push_row = |k: usize, report: &EvalReport<R>| {
        out.push_str(&format!(
            "{},{},{},{},{},{}",
            k, report.threshold, report.apcer, report.bpcer, report.acer, report.eer
        ));
        for entry in &report.fnr_at_fpr {
            out.push_str(&format!(",{}", entry.fnr));
        }
        out.push('\n');
    };
    if let Some(report) = frame {
        push_row(0, report);
    }
    for segment in segments {
        push_row(segment.segment_length, &segment.report);
    }
    out
}
