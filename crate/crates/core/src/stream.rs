//! Frame streams, tracklets and their JSONL wire format.
//!
//! A *tracklet* is one face track: an ordered run of frames, each carrying the
//! raw liveness logit `q` produced by a per-frame classifier. Frame indices
//! are gapless and start at 0, and every frame of a tracklet shares the same
//! ground-truth label. Parsing is strict: structural problems are reported
//! with the offending line, tracklet and frame index instead of being
//! repaired silently.

use std::collections::HashMap;
use std::io::BufRead;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::real::{logistic, Real};

/// Ground-truth class of a tracklet. Attacks carry a free-form type tag
/// ("print", "replay", ...) used for per-type error breakdowns.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ClassLabel {
    Live,
    Attack { attack_type: String },
}

impl ClassLabel {
    pub fn live() -> Self {
        ClassLabel::Live
    }

    pub fn attack(attack_type: impl Into<String>) -> Self {
        ClassLabel::Attack {
            attack_type: attack_type.into(),
        }
    }

    pub fn is_live(&self) -> bool {
        matches!(self, ClassLabel::Live)
    }

    pub fn attack_type(&self) -> Option<&str> {
        match self {
            ClassLabel::Live => None,
            ClassLabel::Attack { attack_type } => Some(attack_type),
        }
    }
}

/// One frame of a tracklet: index, raw logit and an optional embedding used
/// by the loss tooling. Higher `q` means more live.
#[derive(Debug, Clone, PartialEq)]
pub struct LogitFrame<R: Real = f64> {
    pub tracklet_id: String,
    pub t: usize,
    pub q: R,
    pub embedding: Option<Vec<R>>,
}

/// A validated tracklet. Construction enforces every structural invariant,
/// so downstream code can assume frames are dense, ordered and consistent.
#[derive(Debug, Clone, PartialEq)]
pub struct Tracklet<R: Real = f64> {
    id: String,
    label: ClassLabel,
    frames: Vec<LogitFrame<R>>,
}

impl<R: Real> Tracklet<R> {
    /// Builds a tracklet, checking id agreement, dense frame indices from 0,
    /// finite logits and all-or-none embeddings of a single dimension.
    pub fn new(
        id: impl Into<String>,
        label: ClassLabel,
        frames: Vec<LogitFrame<R>>,
    ) -> Result<Self, StreamError> {
        let id = id.into();
        if frames.is_empty() {
            return Err(StreamError::EmptyTracklet { tracklet: id });
        }
        if let ClassLabel::Attack { attack_type } = &label {
            if attack_type.is_empty() {
                return Err(StreamError::EmptyAttackType { tracklet: id });
            }
        }
        let mut embed_dim: Option<usize> = None;
        let mut embed_seen = false;
        for (i, frame) in frames.iter().enumerate() {
            if frame.tracklet_id != id {
                return Err(StreamError::TrackletIdMismatch {
                    tracklet: id,
                    t: frame.t,
                });
            }
            if frame.t != i {
                return Err(StreamError::FrameGap {
                    tracklet: id,
                    expected: i,
                    found: frame.t,
                });
            }
            if !frame.q.is_finite() {
                return Err(StreamError::NonFiniteLogit {
                    tracklet: id,
                    t: frame.t,
                });
            }
            match &frame.embedding {
                Some(e) => {
                    if i > 0 && !embed_seen {
                        return Err(StreamError::InconsistentEmbedding { tracklet: id });
                    }
                    if let Some(d) = embed_dim {
                        if e.len() != d {
                            return Err(StreamError::InconsistentEmbedding { tracklet: id });
                        }
                    } else if e.is_empty() {
                        return Err(StreamError::InconsistentEmbedding { tracklet: id });
                    }
                    embed_dim = Some(e.len());
                    embed_seen = true;
                }
                None => {
                    if embed_seen {
                        return Err(StreamError::InconsistentEmbedding { tracklet: id });
                    }
                }
            }
        }
        Ok(Tracklet { id, label, frames })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn label(&self) -> &ClassLabel {
        &self.label
    }

    pub fn frames(&self) -> &[LogitFrame<R>] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        false // a validated tracklet always has at least one frame
    }
}

/// Output of the smoothing filter for one frame. `p` is derived from
/// `mu_hat` at construction, so `p == logistic(mu_hat)` holds by design.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothedFrame<R: Real = f64> {
    pub t: usize,
    pub q: R,
    pub mu_hat: R,
    pub p: R,
    pub var_hat: R,
}

impl<R: Real> SmoothedFrame<R> {
    pub fn new(t: usize, q: R, mu_hat: R, var_hat: R) -> Self {
        debug_assert!(var_hat >= R::zero());
        SmoothedFrame {
            t,
            q,
            mu_hat,
            p: logistic(mu_hat),
            var_hat,
        }
    }
}

/// One JSONL line. Raw streams carry the first four fields; smoothed streams
/// add `mu_hat`, `p` and `var_hat`. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(bound(
    serialize = "R: serde::Serialize",
    deserialize = "R: serde::de::Deserialize<'de>"
))]
pub struct FrameRecord<R: Real> {
    pub tracklet_id: String,
    pub t: u64,
    pub q: R,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attack_type: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<Vec<R>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_hat: Option<R>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<R>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub var_hat: Option<R>,
}

/// Errors raised while parsing, validating or serializing frame streams.
/// Messages name the tracklet and frame (or input line) that failed.
#[derive(Debug, thiserror::Error)]
pub enum StreamError {
    #[error("line {line}: malformed frame record: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: label must be \"live\" or \"attack\", got {found:?}")]
    BadLabel { line: usize, found: String },
    #[error("line {line}: attack frame is missing a non-empty attack_type")]
    MissingAttackType { line: usize },
    #[error("line {line}: live frame must not carry attack_type")]
    UnexpectedAttackType { line: usize },
    #[error("tracklet {tracklet:?}: duplicate frame index {t}")]
    DuplicateFrame { tracklet: String, t: usize },
    #[error("tracklet {tracklet:?}: frame indices must be dense from 0; expected {expected}, found {found}")]
    FrameGap {
        tracklet: String,
        expected: usize,
        found: usize,
    },
    #[error("tracklet {tracklet:?}: frames disagree on label or attack_type")]
    InconsistentLabel { tracklet: String },
    #[error("tracklet {tracklet:?}: embeddings must be all-or-none with one dimension")]
    InconsistentEmbedding { tracklet: String },
    #[error("tracklet {tracklet:?}: non-finite logit at frame {t}")]
    NonFiniteLogit { tracklet: String, t: usize },
    #[error("tracklet {tracklet:?}: empty tracklet")]
    EmptyTracklet { tracklet: String },
    #[error("tracklet {tracklet:?}: empty attack_type")]
    EmptyAttackType { tracklet: String },
    #[error("tracklet {tracklet:?}: frame at index {t} carries a different tracklet_id")]
    TrackletIdMismatch { tracklet: String, t: usize },
    #[error("smoothed output does not align with tracklets: {message}")]
    AlignmentMismatch { message: String },
    #[error("i/o error while reading stream: {0}")]
    Io(#[from] std::io::Error),
}

/// Reads JSONL frame records, keeping 1-based line numbers for diagnostics.
/// Blank lines are skipped; anything else must be a valid record.
pub fn read_records<R: Real + DeserializeOwned>(
    reader: impl BufRead,
) -> Result<Vec<(usize, FrameRecord<R>)>, StreamError> {
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: FrameRecord<R> =
            serde_json::from_str(&line).map_err(|e| StreamError::Malformed {
                line: line_no,
                message: e.to_string(),
            })?;
        records.push((line_no, record));
    }
    Ok(records)
}

fn label_of_record<R: Real>(
    line: usize,
    record: &FrameRecord<R>,
) -> Result<ClassLabel, StreamError> {
    match record.label.as_str() {
        "live" => {
            if record.attack_type.is_some() {
                return Err(StreamError::UnexpectedAttackType { line });
            }
            Ok(ClassLabel::Live)
        }
        "attack" => match &record.attack_type {
            Some(t) if !t.is_empty() => Ok(ClassLabel::attack(t.clone())),
            _ => Err(StreamError::MissingAttackType { line }),
        },
        other => Err(StreamError::BadLabel {
            line,
            found: other.to_string(),
        }),
    }
}

/// Groups records into validated tracklets, in order of first appearance.
/// Within a tracklet, frames are ordered by `t` and must form 0,1,2,...
pub fn group_records<R: Real>(
    records: &[(usize, FrameRecord<R>)],
) -> Result<Vec<Tracklet<R>>, StreamError> {
    let mut order: Vec<&str> = Vec::new();
    let mut by_id: HashMap<&str, Vec<(usize, &FrameRecord<R>)>> = HashMap::new();
    for (line, record) in records {
        let entry = by_id.entry(record.tracklet_id.as_str()).or_default();
        if entry.is_empty() {
            order.push(record.tracklet_id.as_str());
        }
        entry.push((*line, record));
    }

    let mut tracklets = Vec::with_capacity(order.len());
    for id in order {
        let mut group = by_id.remove(id).expect("group exists");
        let label = label_of_record(group[0].0, group[0].1)?;
        for (line, record) in &group {
            let this = label_of_record(*line, record)?;
            if this != label {
                return Err(StreamError::InconsistentLabel {
                    tracklet: id.to_string(),
                });
            }
        }
        group.sort_by_key(|(_, r)| r.t);
        for pair in group.windows(2) {
            if pair[0].1.t == pair[1].1.t {
                return Err(StreamError::DuplicateFrame {
                    tracklet: id.to_string(),
                    t: pair[0].1.t as usize,
                });
            }
        }
        let frames = group
            .iter()
            .map(|(_, r)| LogitFrame {
                tracklet_id: r.tracklet_id.clone(),
                t: r.t as usize,
                q: r.q,
                embedding: r.embedding.clone(),
            })
            .collect();
        tracklets.push(Tracklet::new(id, label, frames)?);
    }
    Ok(tracklets)
}

/// Parses a JSONL stream into validated tracklets.
pub fn parse_stream<R: Real + DeserializeOwned>(
    reader: impl BufRead,
) -> Result<Vec<Tracklet<R>>, StreamError> {
    let records = read_records(reader)?;
    group_records(&records)
}

fn record_for_frame<R: Real>(
    tracklet: &Tracklet<R>,
    frame: &LogitFrame<R>,
    smoothed: Option<&SmoothedFrame<R>>,
) -> FrameRecord<R> {
    FrameRecord {
        tracklet_id: frame.tracklet_id.clone(),
        t: frame.t as u64,
        q: frame.q,
        label: if tracklet.label().is_live() {
            "live".to_string()
        } else {
            "attack".to_string()
        },
        attack_type: tracklet.label().attack_type().map(|s| s.to_string()),
        embedding: frame.embedding.clone(),
        mu_hat: smoothed.map(|s| s.mu_hat),
        p: smoothed.map(|s| s.p),
        var_hat: smoothed.map(|s| s.var_hat),
    }
}

/// Serializes tracklets back to JSONL, optionally attaching aligned smoothing
/// outputs. Numbers keep full round-trip precision, so
/// `parse_stream(serialize_stream(tracklets))` reproduces the input bit for
/// bit.
pub fn serialize_stream<R: Real + Serialize>(
    tracklets: &[Tracklet<R>],
    smoothed: Option<&[Vec<SmoothedFrame<R>>]>,
) -> Result<String, StreamError> {
    if let Some(s) = smoothed {
        if s.len() != tracklets.len() {
            return Err(StreamError::AlignmentMismatch {
                message: format!(
                    "{} tracklets but {} smoothed sequences",
                    tracklets.len(),
                    s.len()
                ),
            });
        }
    }
    let mut out = String::new();
    for (i, tracklet) in tracklets.iter().enumerate() {
        let smooth_seq = smoothed.map(|s| &s[i]);
        if let Some(seq) = smooth_seq {
            if seq.len() != tracklet.len() {
                return Err(StreamError::AlignmentMismatch {
                    message: format!(
                        "tracklet {:?} has {} frames but {} smoothed frames",
                        tracklet.id(),
                        tracklet.len(),
                        seq.len()
                    ),
                });
            }
        }
        for (j, frame) in tracklet.frames().iter().enumerate() {
            let record = record_for_frame(tracklet, frame, smooth_seq.map(|s| &s[j]));
            out.push_str(&serde_json::to_string(&record).expect("record serializes"));
            out.push('\n');
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(id: &str, t: usize, q: f64) -> LogitFrame<f64> {
        LogitFrame {
            tracklet_id: id.to_string(),
            t,
            q,
            embedding: None,
        }
    }

    #[test]
    fn single_frame_round_trip() {
        let tracklet =
            Tracklet::new("a", ClassLabel::live(), vec![frame("a", 0, 0.25)]).unwrap();
        let text = serialize_stream(std::slice::from_ref(&tracklet), None).unwrap();
        let parsed = parse_stream::<f64>(text.as_bytes()).unwrap();
        assert_eq!(parsed, vec![tracklet]);
    }

    #[test]
    fn gap_is_reported_with_tracklet_and_index() {
        let frames = vec![frame("a", 0, 0.0), frame("a", 2, 0.0)];
        let err = Tracklet::new("a", ClassLabel::live(), frames).unwrap_err();
        match err {
            StreamError::FrameGap {
                tracklet,
                expected,
                found,
            } => {
                assert_eq!(tracklet, "a");
                assert_eq!(expected, 1);
                assert_eq!(found, 2);
            }
            other => panic!("expected FrameGap, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_frame_is_rejected() {
        let text = concat!(
            r#"{"tracklet_id":"a","t":0,"q":0.1,"label":"live"}"#,
            "\n",
            r#"{"tracklet_id":"a","t":0,"q":0.2,"label":"live"}"#,
            "\n"
        );
        let err = parse_stream::<f64>(text.as_bytes()).unwrap_err();
        assert!(matches!(err, StreamError::DuplicateFrame { t: 0, .. }));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let text = concat!(
            r#"{"tracklet_id":"a","t":0,"q":0.1,"label":"live"}"#,
            "\n",
            "{not json}\n"
        );
        let err = parse_stream::<f64>(text.as_bytes()).unwrap_err();
        assert!(matches!(err, StreamError::Malformed { line: 2, .. }));
    }

    #[test]
    fn unknown_field_is_malformed() {
        let text = r#"{"tracklet_id":"a","t":0,"q":0.1,"label":"live","extra":1}"#;
        let err = parse_stream::<f64>(text.as_bytes()).unwrap_err();
        assert!(matches!(err, StreamError::Malformed { line: 1, .. }));
    }

    #[test]
    fn attack_requires_type_and_live_forbids_it() {
        let missing = r#"{"tracklet_id":"a","t":0,"q":0.1,"label":"attack"}"#;
        assert!(matches!(
            parse_stream::<f64>(missing.as_bytes()).unwrap_err(),
            StreamError::MissingAttackType { line: 1 }
        ));
        let extra = r#"{"tracklet_id":"a","t":0,"q":0.1,"label":"live","attack_type":"print"}"#;
        assert!(matches!(
            parse_stream::<f64>(extra.as_bytes()).unwrap_err(),
            StreamError::UnexpectedAttackType { line: 1 }
        ));
    }

    #[test]
    fn inconsistent_labels_within_tracklet() {
        let text = concat!(
            r#"{"tracklet_id":"a","t":0,"q":0.1,"label":"live"}"#,
            "\n",
            r#"{"tracklet_id":"a","t":1,"q":0.2,"label":"attack","attack_type":"print"}"#,
            "\n"
        );
        let err = parse_stream::<f64>(text.as_bytes()).unwrap_err();
        assert!(matches!(err, StreamError::InconsistentLabel { .. }));
    }

    #[test]
    fn embedding_dimensions_must_agree() {
        let frames = vec![
            LogitFrame {
                tracklet_id: "a".into(),
                t: 0,
                q: 0.0,
                embedding: Some(vec![1.0, 2.0]),
            },
            LogitFrame {
                tracklet_id: "a".into(),
                t: 1,
                q: 0.0,
                embedding: Some(vec![1.0]),
            },
        ];
        let err = Tracklet::new("a", ClassLabel::live(), frames).unwrap_err();
        assert!(matches!(err, StreamError::InconsistentEmbedding { .. }));
    }

    #[test]
    fn non_finite_logit_is_rejected() {
        let text = r#"{"tracklet_id":"a","t":0,"q":1e999,"label":"live"}"#;
        // 1e999 does not parse as a finite f64, so this surfaces as malformed.
        assert!(parse_stream::<f64>(text.as_bytes()).is_err());
        let frames = vec![frame("a", 0, f64::NAN)];
        let err = Tracklet::new("a", ClassLabel::live(), frames).unwrap_err();
        assert!(matches!(err, StreamError::NonFiniteLogit { t: 0, .. }));
    }

    #[test]
    fn interleaved_tracklets_group_in_first_appearance_order() {
        let text = concat!(
            r#"{"tracklet_id":"b","t":0,"q":0.1,"label":"live"}"#,
            "\n",
            r#"{"tracklet_id":"a","t":0,"q":0.2,"label":"live"}"#,
            "\n",
            r#"{"tracklet_id":"b","t":1,"q":0.3,"label":"live"}"#,
            "\n"
        );
        let tracklets = parse_stream::<f64>(text.as_bytes()).unwrap();
        assert_eq!(tracklets.len(), 2);
        assert_eq!(tracklets[0].id(), "b");
        assert_eq!(tracklets[0].len(), 2);
        assert_eq!(tracklets[1].id(), "a");
    }

    #[test]
    fn smoothed_round_trip_is_bit_exact() {
        let t = Tracklet::new(
            "a",
            ClassLabel::attack("replay"),
            vec![frame("a", 0, 0.1), frame("a", 1, -2.7)],
        )
        .unwrap();
        let smoothed = vec![vec![
            SmoothedFrame::new(0, 0.1, 0.1, 1.0),
            SmoothedFrame::new(1, -2.7, -1.3, 0.4),
        ]];
        let text = serialize_stream(&[t], Some(&smoothed)).unwrap();
        let records = read_records::<f64>(text.as_bytes()).unwrap();
        assert_eq!(records[1].1.mu_hat, Some(-1.3));
        assert_eq!(records[1].1.p, Some(crate::real::logistic(-1.3)));
        assert_eq!(records[1].1.var_hat, Some(0.4));
    }
}
