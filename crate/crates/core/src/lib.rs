//! Temporal-consistency toolkit for online face liveness scores.
//!
//! A per-frame liveness model emits a logit per face crop; decisions taken
//! frame by frame flicker whenever the model wobbles. This crate smooths
//! logit streams online with an uncertainty-aware recursive filter (plus
//! EMA/SMA baselines), offers training-time consistency losses over
//! embedding batches with analytic gradients and a finite-difference
//! checker, and evaluates the result with presentation-attack metrics
//! (APCER/BPCER/ACER, EER, FNR@FPR) at frame and segment level. A seeded
//! synthetic generator supplies realistic flickering streams for demos and
//! tests.
//!
//! Everything numeric is generic over the scalar through [`Real`], with
//! `f64` as the default type parameter; `*32` aliases at the crate root
//! pick the `f32` instantiations.
//!
//! ```
//! use tempco::{run_filter, FilterConfig, SynthConfig};
//!
//! let config: SynthConfig = SynthConfig::default();
//! let tracklets = tempco::generate(&config).unwrap();
//! let smoothed = run_filter(&tracklets[0], &FilterConfig::default()).unwrap();
//! assert_eq!(smoothed.len(), tracklets[0].len());
//! assert!(smoothed.iter().all(|f| f.p > 0.0 && f.p < 1.0));
//! ```

pub mod filter;
pub mod losses;
pub mod metrics;
pub mod real;
pub mod stream;
pub mod synth;

pub use filter::{blend, run_filter, FilterConfig, FilterError, FilterMethod, ScoreFilter};
pub use losses::{
    class_consistency_loss, class_consistency_loss_with, classification_loss, combined_loss,
    fd_grad_logits, fd_grad_x, grad_check, max_rel_err, parse_batch, serialize_batch,
    temporal_loss, temporal_loss_with, tie_margin, BatchRecord, CheckStatus, EmbeddingBatch,
    GradCheckReport, LossCheck, LossComponents, LossError, LossResult, MaxScope, DEFAULT_BETA,
    DEFAULT_FD_STEP, DEFAULT_FD_TOL, DEFAULT_GAMMA, DEFAULT_TIE_MARGIN,
};
pub use metrics::{
    calibrate_threshold, confusion_at, csv_report, evaluate_segments, fpr_target_label,
    roc_and_eer, segment_split, CalibratedThreshold, Confusion, EvalReport, FnrAtFpr,
    MetricsError, RocAnalysis, RocPoint, ScoredSample, SegmentReport, ThresholdPolicy,
    FPR_TARGETS, REJECT_ALL_THRESHOLD,
};
pub use real::{logistic, Real};
pub use stream::{
    group_records, parse_stream, read_records, serialize_stream, ClassLabel, FrameRecord,
    LogitFrame, SmoothedFrame, StreamError, Tracklet,
};
pub use synth::{
    calibrate_sigma, generate, probability_std, SynthConfig, SynthError, DEFAULT_SIGMA,
    SYNTH_ATTACK_TYPE,
};

/// `f32` instantiations of the data types.
pub type LogitFrame32 = stream::LogitFrame<f32>;
pub type Tracklet32 = stream::Tracklet<f32>;
pub type SmoothedFrame32 = stream::SmoothedFrame<f32>;
pub type FrameRecord32 = stream::FrameRecord<f32>;
pub type FilterConfig32 = filter::FilterConfig<f32>;
pub type ScoreFilter32 = filter::ScoreFilter<f32>;
pub type EmbeddingBatch32 = losses::EmbeddingBatch<f32>;
pub type LossResult32 = losses::LossResult<f32>;
pub type ScoredSample32 = metrics::ScoredSample<f32>;
pub type EvalReport32 = metrics::EvalReport<f32>;
pub type SynthConfig32 = synth::SynthConfig<f32>;
