//! Training losses over embedding batches, with analytic gradients.
//!
//! Three terms are provided. The classification loss is a standard softmax
//! cross entropy over per-sample logits. The temporal loss penalizes, for
//! each anchor, the squared Euclidean distance to its farthest neighbour
//! from the same video; the class-consistency loss does the same over
//! same-class neighbours. Both push the worst-offending pairs together,
//! which is what makes per-frame predictions stable over time.
//!
//! All three average over the batch size `m`:
//!
//! ```text
//! L_cls = -(1/m) sum_i log softmax(logits_i)[y_i]
//! L_t   =  (1/m) sum_i max_{j in video(i), j != i} ||x_i - x_j||^2
//! L_e   =  (1/m) sum_i max_{j: y_j == y_i, j != i} ||x_i - x_j||^2
//! L     =  L_cls + beta * L_t + gamma * L_e
//! ```
//!
//! The max terms are piecewise smooth; at the selected pair `(i, j*)` the
//! subgradient contributes `+2 (x_i - x_j*) / m` to the anchor row and the
//! negation to the `j*` row. Ties resolve to the smallest index so results
//! are deterministic. The per-video/per-class "one max per group" reading is
//! available through [`MaxScope::PerGroup`].
//!
//! [`grad_check`] compares every analytic gradient against central finite
//! differences of the loss value, which is the verification the
//! `grad-check` CLI command runs.

use std::collections::HashMap;
use std::io::BufRead;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::real::Real;

/// Default weight of the temporal term in the combined loss.
pub const DEFAULT_BETA: f64 = 1.0;
/// Default weight of the class-consistency term in the combined loss.
pub const DEFAULT_GAMMA: f64 = 0.5;
/// Default step for central finite differences.
pub const DEFAULT_FD_STEP: f64 = 1e-5;
/// Relative-error gate for the gradient check.
pub const DEFAULT_FD_TOL: f64 = 1e-4;
/// Anchors whose two best candidates are closer than this squared-distance
/// margin sit on a subgradient boundary; mismatches there are reported as
/// skipped rather than failed.
pub const DEFAULT_TIE_MARGIN: f64 = 1e-3;

#[derive(Debug, thiserror::Error)]
pub enum LossError {
    #[error("batch must contain at least one sample")]
    EmptyBatch,
    #[error("sample {index}: {message}")]
    BadSample { index: usize, message: String },
    #[error("logits must be present for all samples or none")]
    PartialLogits,
    #[error("classification loss requires logits")]
    MissingLogits,
    #[error("line {line}: malformed batch record: {message}")]
    Malformed { line: usize, message: String },
    #[error("invalid finite-difference step: {0}")]
    BadStep(String),
    #[error("i/o error while reading batch: {0}")]
    Io(#[from] std::io::Error),
}

/// A batch of `m` embeddings of dimension `d`, each tagged with the video it
/// came from and its class id, plus optional per-sample logits of width `C`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingBatch<R: Real = f64> {
    x: Vec<R>,
    m: usize,
    d: usize,
    video_ids: Vec<String>,
    class_ids: Vec<usize>,
    logits: Option<Vec<R>>,
    n_classes: usize,
}

impl<R: Real> EmbeddingBatch<R> {
    /// Validates and assembles a batch from per-sample rows.
    pub fn new(
        embeddings: Vec<Vec<R>>,
        video_ids: Vec<String>,
        class_ids: Vec<usize>,
        logits: Option<Vec<Vec<R>>>,
    ) -> Result<Self, LossError> {
        let m = embeddings.len();
        if m == 0 {
            return Err(LossError::EmptyBatch);
        }
        if video_ids.len() != m || class_ids.len() != m {
            return Err(LossError::BadSample {
                index: 0,
                message: "embeddings, video_ids and class_ids must have equal length".into(),
            });
        }
        let d = embeddings[0].len();
        if d == 0 {
            return Err(LossError::BadSample {
                index: 0,
                message: "embedding dimension must be at least 1".into(),
            });
        }
        let mut x = Vec::with_capacity(m * d);
        for (i, row) in embeddings.iter().enumerate() {
            if row.len() != d {
                return Err(LossError::BadSample {
                    index: i,
                    message: format!("embedding dimension {} != {}", row.len(), d),
                });
            }
            for v in row {
                if !v.is_finite() {
                    return Err(LossError::BadSample {
                        index: i,
                        message: "non-finite embedding component".into(),
                    });
                }
                x.push(*v);
            }
        }
        let mut n_classes = 0;
        let flat_logits = match logits {
            Some(rows) => {
                if rows.len() != m {
                    return Err(LossError::PartialLogits);
                }
                let c = rows[0].len();
                if c < 2 {
                    return Err(LossError::BadSample {
                        index: 0,
                        message: "logit width must be at least 2".into(),
                    });
                }
                let mut flat = Vec::with_capacity(m * c);
                for (i, row) in rows.iter().enumerate() {
                    if row.len() != c {
                        return Err(LossError::BadSample {
                            index: i,
                            message: format!("logit width {} != {}", row.len(), c),
                        });
                    }
                    if class_ids[i] >= c {
                        return Err(LossError::BadSample {
                            index: i,
                            message: format!("class_id {} out of range 0..{}", class_ids[i], c),
                        });
                    }
                    for v in row {
                        if !v.is_finite() {
                            return Err(LossError::BadSample {
                                index: i,
                                message: "non-finite logit".into(),
                            });
                        }
                        flat.push(*v);
                    }
                }
                n_classes = c;
                Some(flat)
            }
            None => None,
        };
        Ok(EmbeddingBatch {
            x,
            m,
            d,
            video_ids,
            class_ids,
            logits: flat_logits,
            n_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn n_classes(&self) -> Option<usize> {
        self.logits.as_ref().map(|_| self.n_classes)
    }

    pub fn has_logits(&self) -> bool {
        self.logits.is_some()
    }

    pub fn video_id(&self, i: usize) -> &str {
        &self.video_ids[i]
    }

    pub fn class_id(&self, i: usize) -> usize {
        self.class_ids[i]
    }

    pub fn embedding(&self, i: usize) -> &[R] {
        &self.x[i * self.d..(i + 1) * self.d]
    }

    /// Mutable embedding row; used by the finite-difference probes.
    pub fn embedding_mut(&mut self, i: usize) -> &mut [R] {
        &mut self.x[i * self.d..(i + 1) * self.d]
    }

    pub fn logits_row(&self, i: usize) -> Option<&[R]> {
        self.logits
            .as_ref()
            .map(|l| &l[i * self.n_classes..(i + 1) * self.n_classes])
    }

    /// Mutable logit row; used by the finite-difference probes.
    pub fn logits_row_mut(&mut self, i: usize) -> Option<&mut [R]> {
        let c = self.n_classes;
        self.logits
            .as_mut()
            .map(move |l| &mut l[i * c..(i + 1) * c])
    }

    fn sqdist(&self, i: usize, j: usize) -> R {
        let a = self.embedding(i);
        let b = self.embedding(j);
        let mut acc = R::zero();
        for k in 0..self.d {
            let r = a[k] - b[k];
            acc = acc + r * r;
        }
        acc
    }
}

/// One JSONL line of a batch file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(bound(
    serialize = "R: serde::Serialize",
    deserialize = "R: serde::de::Deserialize<'de>"
))]
pub struct BatchRecord<R: Real> {
    pub video_id: String,
    pub class_id: u64,
    pub x: Vec<R>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub logits: Option<Vec<R>>,
}

/// Parses a batch from JSONL, one sample per line.
pub fn parse_batch<R: Real + DeserializeOwned>(
    reader: impl BufRead,
) -> Result<EmbeddingBatch<R>, LossError> {
    let mut embeddings = Vec::new();
    let mut video_ids = Vec::new();
    let mut class_ids = Vec::new();
    let mut logits: Vec<Option<Vec<R>>> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: BatchRecord<R> =
            serde_json::from_str(&line).map_err(|e| LossError::Malformed {
                line: line_no,
                message: e.to_string(),
            })?;
        embeddings.push(record.x);
        video_ids.push(record.video_id);
        class_ids.push(record.class_id as usize);
        logits.push(record.logits);
    }
    if embeddings.is_empty() {
        return Err(LossError::EmptyBatch);
    }
    let with_logits = logits.iter().filter(|l| l.is_some()).count();
    let logits = if with_logits == 0 {
        None
    } else if with_logits == logits.len() {
        Some(logits.into_iter().map(|l| l.unwrap()).collect())
    } else {
        return Err(LossError::PartialLogits);
    };
    EmbeddingBatch::new(embeddings, video_ids, class_ids, logits)
}

/// Writes a batch back to JSONL (used to ship reproducible fixtures).
pub fn serialize_batch<R: Real + Serialize>(batch: &EmbeddingBatch<R>) -> String {
    let mut out = String::new();
    for i in 0..batch.len() {
        let record = BatchRecord {
            video_id: batch.video_id(i).to_string(),
            class_id: batch.class_id(i) as u64,
            x: batch.embedding(i).to_vec(),
            logits: batch.logits_row(i).map(|r| r.to_vec()),
        };
        out.push_str(&serde_json::to_string(&record).expect("record serializes"));
        out.push('\n');
    }
    out
}

/// Per-term values of the combined loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossComponents<R: Real = f64> {
    pub classification: R,
    pub temporal: R,
    pub class_consistency: R,
}

/// A loss value with its gradients. `grad_x` is a flat `m x d` row-major
/// matrix aligned with the batch embeddings; `grad_logits` is present only
/// when the classification term participates.
#[derive(Debug, Clone, PartialEq)]
pub struct LossResult<R: Real = f64> {
    pub value: R,
    pub grad_x: Vec<R>,
    pub grad_logits: Option<Vec<R>>,
    pub components: LossComponents<R>,
}

/// How the pairwise max is reduced: one max per anchor (the default) or one
/// max per video/class group.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaxScope {
    PerAnchor,
    PerGroup,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum GroupBy {
    Video,
    Class,
}

/// Group membership in first-appearance order, so iteration is
/// deterministic regardless of hash state.
fn group_indices<R: Real>(batch: &EmbeddingBatch<R>, by: GroupBy) -> Vec<Vec<usize>> {
    let mut keys: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in 0..batch.len() {
        let key = match by {
            GroupBy::Video => batch.video_id(i).to_string(),
            GroupBy::Class => batch.class_id(i).to_string(),
        };
        match index.get(&key) {
            Some(&g) => groups[g].push(i),
            None => {
                index.insert(key.clone(), groups.len());
                keys.push(key);
                groups.push(vec![i]);
            }
        }
    }
    groups
}

fn zeros<R: Real>(n: usize) -> Vec<R> {
    vec![R::zero(); n]
}

/// Shared engine for the temporal and class-consistency terms.
fn pairwise_max_loss<R: Real>(
    batch: &EmbeddingBatch<R>,
    by: GroupBy,
    scope: MaxScope,
) -> (R, Vec<R>) {
    let m = R::of_usize(batch.len());
    let d = batch.dim();
    let mut value = R::zero();
    let mut grad = zeros::<R>(batch.len() * d);
    let groups = group_indices(batch, by);

    let add_pair = |grad: &mut Vec<R>, i: usize, j: usize| {
        // Subgradient of ||x_i - x_j||^2 at the selected pair, scaled 1/m.
        let two_over_m = R::of(2.0) / m;
        for k in 0..d {
            let r = batch.embedding(i)[k] - batch.embedding(j)[k];
            grad[i * d + k] = grad[i * d + k] + two_over_m * r;
            grad[j * d + k] = grad[j * d + k] - two_over_m * r;
        }
    };

    match scope {
        MaxScope::PerAnchor => {
            for group in &groups {
                for (pos, &i) in group.iter().enumerate() {
                    let mut best: Option<(R, usize)> = None;
                    for (opos, &j) in group.iter().enumerate() {
                        if opos == pos {
                            continue;
                        }
                        let d2 = batch.sqdist(i, j);
                        // Strict > keeps the smallest j on ties.
                        match best {
                            Some((b, _)) if d2 <= b => {}
                            _ => best = Some((d2, j)),
                        }
                    }
                    if let Some((d2, j)) = best {
                        value = value + d2 / m;
                        add_pair(&mut grad, i, j);
                    }
                    // Singleton anchors contribute nothing.
                }
            }
        }
        MaxScope::PerGroup => {
            for group in &groups {
                let mut best: Option<(R, usize, usize)> = None;
                for (pos, &i) in group.iter().enumerate() {
                    for &j in &group[pos + 1..] {
                        let d2 = batch.sqdist(i, j);
                        // Strict > keeps the lexicographically smallest pair.
                        match best {
                            Some((b, _, _)) if d2 <= b => {}
                            _ => best = Some((d2, i, j)),
                        }
                    }
                }
                if let Some((d2, i, j)) = best {
                    value = value + d2 / m;
                    add_pair(&mut grad, i, j);
                }
            }
        }
    }
    (value, grad)
}

/// Softmax cross entropy over the batch logits, with gradient
/// `(softmax - onehot) / m` on the logits and zero on the embeddings.
pub fn classification_loss<R: Real>(batch: &EmbeddingBatch<R>) -> Result<LossResult<R>, LossError> {
    let c = batch.n_classes().ok_or(LossError::MissingLogits)?;
    let m = R::of_usize(batch.len());
    let mut value = R::zero();
    let mut grad_logits = zeros::<R>(batch.len() * c);
    for i in 0..batch.len() {
        let row = batch.logits_row(i).expect("logits present");
        let y = batch.class_id(i);
        // Log-sum-exp with max subtraction for stability.
        let mut max = row[0];
        for &z in row {
            if z > max {
                max = z;
            }
        }
        let mut sum = R::zero();
        for &z in row {
            sum = sum + (z - max).exp();
        }
        let lse = max + sum.ln();
        value = value + (lse - row[y]) / m;
        for k in 0..c {
            let softmax = (row[k] - lse).exp();
            let target = if k == y { R::one() } else { R::zero() };
            grad_logits[i * c + k] = (softmax - target) / m;
        }
    }
    Ok(LossResult {
        value,
        grad_x: zeros(batch.len() * batch.dim()),
        grad_logits: Some(grad_logits),
        components: LossComponents {
            classification: value,
            temporal: R::zero(),
            class_consistency: R::zero(),
        },
    })
}

/// Temporal consistency term with the default per-anchor reduction.
pub fn temporal_loss<R: Real>(batch: &EmbeddingBatch<R>) -> LossResult<R> {
    temporal_loss_with(batch, MaxScope::PerAnchor)
}

/// Temporal consistency term with an explicit reduction scope.
pub fn temporal_loss_with<R: Real>(batch: &EmbeddingBatch<R>, scope: MaxScope) -> LossResult<R> {
    let (value, grad_x) = pairwise_max_loss(batch, GroupBy::Video, scope);
    LossResult {
        value,
        grad_x,
        grad_logits: None,
        components: LossComponents {
            classification: R::zero(),
            temporal: value,
            class_consistency: R::zero(),
        },
    }
}

/// Class consistency term with the default per-anchor reduction.
pub fn class_consistency_loss<R: Real>(batch: &EmbeddingBatch<R>) -> LossResult<R> {
    class_consistency_loss_with(batch, MaxScope::PerAnchor)
}

/// Class consistency term with an explicit reduction scope.
pub fn class_consistency_loss_with<R: Real>(
    batch: &EmbeddingBatch<R>,
    scope: MaxScope,
) -> LossResult<R> {
    let (value, grad_x) = pairwise_max_loss(batch, GroupBy::Class, scope);
    LossResult {
        value,
        grad_x,
        grad_logits: None,
        components: LossComponents {
            classification: R::zero(),
            temporal: R::zero(),
            class_consistency: value,
        },
    }
}

/// Weighted sum `L_cls + beta * L_t + gamma * L_e`. The classification term
/// is skipped (contributing zero) when the batch has no logits.
pub fn combined_loss<R: Real>(batch: &EmbeddingBatch<R>, beta: R, gamma: R) -> LossResult<R> {
    let cls = if batch.has_logits() {
        Some(classification_loss(batch).expect("logits checked"))
    } else {
        None
    };
    let t = temporal_loss(batch);
    let e = class_consistency_loss(batch);
    let cls_value = cls.as_ref().map_or(R::zero(), |c| c.value);
    let grad_x: Vec<R> = t
        .grad_x
        .iter()
        .zip(&e.grad_x)
        .map(|(&tg, &eg)| beta * tg + gamma * eg)
        .collect();
    LossResult {
        value: cls_value + beta * t.value + gamma * e.value,
        grad_x,
        grad_logits: cls.map(|c| c.grad_logits.expect("classification has logit grad")),
        components: LossComponents {
            classification: cls_value,
            temporal: t.value,
            class_consistency: e.value,
        },
    }
}

/// Central finite differences of `f` with respect to every embedding
/// coordinate, step `h`: `(f(x + h) - f(x - h)) / 2h` per coordinate.
pub fn fd_grad_x<R: Real>(
    batch: &EmbeddingBatch<R>,
    step: R,
    mut f: impl FnMut(&EmbeddingBatch<R>) -> R,
) -> Result<Vec<R>, LossError> {
    if !step.is_finite() || step <= R::zero() {
        return Err(LossError::BadStep(format!("{step:?}")));
    }
    let mut probe = batch.clone();
    let mut grad = Vec::with_capacity(batch.len() * batch.dim());
    let two_h = R::of(2.0) * step;
    for i in 0..batch.len() {
        for k in 0..batch.dim() {
            let orig = probe.embedding(i)[k];
            probe.embedding_mut(i)[k] = orig + step;
            let plus = f(&probe);
            probe.embedding_mut(i)[k] = orig - step;
            let minus = f(&probe);
            probe.embedding_mut(i)[k] = orig;
            grad.push((plus - minus) / two_h);
        }
    }
    Ok(grad)
}

/// Central finite differences of `f` with respect to every logit.
pub fn fd_grad_logits<R: Real>(
    batch: &EmbeddingBatch<R>,
    step: R,
    mut f: impl FnMut(&EmbeddingBatch<R>) -> R,
) -> Result<Vec<R>, LossError> {
    if !step.is_finite() || step <= R::zero() {
        return Err(LossError::BadStep(format!("{step:?}")));
    }
    let c = batch.n_classes().ok_or(LossError::MissingLogits)?;
    let mut probe = batch.clone();
    let mut grad = Vec::with_capacity(batch.len() * c);
    let two_h = R::of(2.0) * step;
    for i in 0..batch.len() {
        for k in 0..c {
            let orig = probe.logits_row(i).expect("logits")[k];
            probe.logits_row_mut(i).expect("logits")[k] = orig + step;
            let plus = f(&probe);
            probe.logits_row_mut(i).expect("logits")[k] = orig - step;
            let minus = f(&probe);
            probe.logits_row_mut(i).expect("logits")[k] = orig;
            grad.push((plus - minus) / two_h);
        }
    }
    Ok(grad)
}

/// Smallest gap between an anchor's best and second-best squared candidate
/// distance, over all anchors with at least two candidates. `None` when no
/// anchor faces a choice (so ties are impossible).
pub fn tie_margin<R: Real>(batch: &EmbeddingBatch<R>, by_class: bool, scope: MaxScope) -> Option<R> {
    let by = if by_class { GroupBy::Class } else { GroupBy::Video };
    let groups = group_indices(batch, by);
    let mut margin: Option<R> = None;
    let mut update = |gap: R| {
        margin = Some(match margin {
            Some(m) if m <= gap => m,
            _ => gap,
        });
    };
    match scope {
        MaxScope::PerAnchor => {
            for group in &groups {
                for (pos, &i) in group.iter().enumerate() {
                    let mut dists: Vec<R> = group
                        .iter()
                        .enumerate()
                        .filter(|(opos, _)| *opos != pos)
                        .map(|(_, &j)| batch.sqdist(i, j))
                        .collect();
                    if dists.len() < 2 {
                        continue;
                    }
                    dists.sort_by(|a, b| b.partial_cmp(a).expect("finite distances"));
                    update(dists[0] - dists[1]);
                }
            }
        }
        MaxScope::PerGroup => {
            for group in &groups {
                let mut dists = Vec::new();
                for (pos, &i) in group.iter().enumerate() {
                    for &j in &group[pos + 1..] {
                        dists.push(batch.sqdist(i, j));
                    }
                }
                if dists.len() < 2 {
                    continue;
                }
                dists.sort_by(|a, b| b.partial_cmp(a).expect("finite distances"));
                update(dists[0] - dists[1]);
            }
        }
    }
    margin
}

/// Outcome of one analytic-vs-numeric comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CheckStatus<R: Real = f64> {
    Passed { max_rel_err: R },
    /// The comparison exceeded the tolerance, but an argmax tie sits within
    /// the tie margin, so the subgradient is not unique at this input.
    SkippedAtTie { max_rel_err: R, margin: R },
    Failed { max_rel_err: R },
}

impl<R: Real> CheckStatus<R> {
    pub fn is_failure(&self) -> bool {
        matches!(self, CheckStatus::Failed { .. })
    }
}

/// Gradient-check report for one loss term.
#[derive(Debug, Clone, Serialize)]
pub struct LossCheck<R: Real = f64> {
    pub loss: &'static str,
    #[serde(flatten)]
    pub status: CheckStatus<R>,
}

/// Full gradient-check report.
#[derive(Debug, Clone, Serialize)]
pub struct GradCheckReport<R: Real = f64> {
    pub fd_step: R,
    pub tolerance: R,
    pub checks: Vec<LossCheck<R>>,
}

impl<R: Real> GradCheckReport<R> {
    pub fn passed(&self) -> bool {
        !self.checks.iter().any(|c| c.status.is_failure())
    }
}

/// Max over coordinates of `|a - n| / max(1, |n|)`: relative error with a
/// unit floor so near-zero components compare absolutely.
pub fn max_rel_err<R: Real>(analytic: &[R], numeric: &[R]) -> R {
    debug_assert_eq!(analytic.len(), numeric.len());
    let mut worst = R::zero();
    for (a, n) in analytic.iter().zip(numeric) {
        let denom = n.abs().max(R::one());
        let err = (*a - *n).abs() / denom;
        if err > worst {
            worst = err;
        }
    }
    worst
}

fn status_for<R: Real>(err: R, tol: R, margin: Option<R>, tie_margin: R) -> CheckStatus<R> {
    if err <= tol {
        CheckStatus::Passed { max_rel_err: err }
    } else {
        match margin {
            Some(m) if m <= tie_margin => CheckStatus::SkippedAtTie {
                max_rel_err: err,
                margin: m,
            },
            _ => CheckStatus::Failed { max_rel_err: err },
        }
    }
}

/// Compares every analytic gradient against central finite differences.
///
/// Each available term is checked separately, then the combined loss with
/// the given weights. A term that exceeds `tol` while its argmax margin is
/// within [`DEFAULT_TIE_MARGIN`] reports as skipped-at-tie, since the max is
/// not differentiable there.
pub fn grad_check<R: Real>(
    batch: &EmbeddingBatch<R>,
    beta: R,
    gamma: R,
    step: R,
    tol: R,
) -> Result<GradCheckReport<R>, LossError> {
    let tie = R::of(DEFAULT_TIE_MARGIN);
    let mut checks = Vec::new();

    if batch.has_logits() {
        let analytic = classification_loss(batch)?;
        let numeric = fd_grad_logits(batch, step, |b| {
            classification_loss(b).expect("logits present").value
        })?;
        let err = max_rel_err(analytic.grad_logits.as_ref().expect("logit grad"), &numeric);
        checks.push(LossCheck {
            loss: "classification",
            status: status_for(err, tol, None, tie),
        });
    }

    let analytic = temporal_loss(batch);
    let numeric = fd_grad_x(batch, step, |b| temporal_loss(b).value)?;
    let err = max_rel_err(&analytic.grad_x, &numeric);
    let margin = tie_margin(batch, false, MaxScope::PerAnchor);
    checks.push(LossCheck {
        loss: "temporal",
        status: status_for(err, tol, margin, tie),
    });

    let analytic = class_consistency_loss(batch);
    let numeric = fd_grad_x(batch, step, |b| class_consistency_loss(b).value)?;
    let err = max_rel_err(&analytic.grad_x, &numeric);
    let margin = tie_margin(batch, true, MaxScope::PerAnchor);
    checks.push(LossCheck {
        loss: "class-consistency",
        status: status_for(err, tol, margin, tie),
    });

    let analytic = combined_loss(batch, beta, gamma);
    let numeric = fd_grad_x(batch, step, |b| combined_loss(b, beta, gamma).value)?;
    let mut err = max_rel_err(&analytic.grad_x, &numeric);
    if batch.has_logits() {
        let numeric_logits =
            fd_grad_logits(batch, step, |b| combined_loss(b, beta, gamma).value)?;
        let logit_err = max_rel_err(
            analytic.grad_logits.as_ref().expect("logit grad"),
            &numeric_logits,
        );
        if logit_err > err {
            err = logit_err;
        }
    }
    let margin = match (
        tie_margin(batch, false, MaxScope::PerAnchor),
        tie_margin(batch, true, MaxScope::PerAnchor),
    ) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    };
    checks.push(LossCheck {
        loss: "combined",
        status: status_for(err, tol, margin, tie),
    });

    Ok(GradCheckReport {
        fd_step: step,
        tolerance: tol,
        checks,
    })
}
