//! WER, per-word error targets, and uncertainty-evaluation metrics.

use serde::{Deserialize, Serialize};

use crate::alignment::{align_with, OpKind};
use crate::recognition::Transcription;
use crate::text::Normalization;
use crate::uncertainty::{mask_from_scores, UncertaintyMask};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("reference transcript is empty")]
    EmptyReference,
    #[error("mask has {mask} flags but there are {targets} targets")]
    LengthMismatch { mask: usize, targets: usize },
}

/// Alignment of a hypothesis against its reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub wer: f64,
    pub n_ref_words: usize,
    pub n_hyp_words: usize,
    pub substitutions: usize,
    pub deletions: usize,
    pub insertions: usize,
    /// One entry per hypothesis word.
    pub per_word_correct: Vec<bool>,
    /// Reference words with no counterpart in the hypothesis.
    pub missed_ref_words: usize,
}

impl EvalReport {
    /// Per hypothesis word, `true` when it is an error (replacement or insertion).
    pub fn error_targets(&self) -> Vec<bool> {
        self.per_word_correct.iter().map(|c| !c).collect()
    }
}

pub fn evaluate_words<R: AsRef<str>, H: AsRef<str>>(
    reference: &[R],
    hypothesis: &[H],
    normalization: Normalization,
) -> Result<EvalReport, MetricsError> {
    if reference.is_empty() {
        return Err(MetricsError::EmptyReference);
    }
    let script = align_with(reference, hypothesis, normalization);
    let mut correct = vec![true; hypothesis.len()];
    let (mut s, mut d, mut i) = (0, 0, 0);
    for op in &script.ops {
        match op.kind {
            OpKind::Replace => {
                s += op.base.len().max(op.other.len());
                // an uneven replacement counts its surplus as insertions or deletions
                s -= op.base.len().abs_diff(op.other.len());
                if op.base.len() > op.other.len() {
                    d += op.base.len() - op.other.len();
                } else {
                    i += op.other.len() - op.base.len();
                }
                correct[op.other.clone()].iter_mut().for_each(|c| *c = false);
            }
            OpKind::Insert => {
                i += op.other.len();
                correct[op.other.clone()].iter_mut().for_each(|c| *c = false);
            }
            OpKind::Delete => d += op.base.len(),
            OpKind::Equal | OpKind::Accepted => {}
        }
    }
    Ok(EvalReport {
        wer: (s + d + i) as f64 / reference.len() as f64,
        n_ref_words: reference.len(),
        n_hyp_words: hypothesis.len(),
        substitutions: s,
        deletions: d,
        insertions: i,
        per_word_correct: correct,
        missed_ref_words: d,
    })
}

/// Word error rate with case folding and punctuation stripping.
pub fn wer<R: AsRef<str>, H: AsRef<str>>(reference: &[R], hypothesis: &[H]) -> Result<f64, MetricsError> {
    wer_with(reference, hypothesis, Normalization::FULL)
}

pub fn wer_with<R: AsRef<str>, H: AsRef<str>>(
    reference: &[R],
    hypothesis: &[H],
    normalization: Normalization,
) -> Result<f64, MetricsError> {
    evaluate_words(reference, hypothesis, normalization).map(|r| r.wer)
}

/// `true` for every hypothesis word that is wrong: part of a replacement or
/// an insertion. Reference words the hypothesis skipped are not represented.
pub fn word_error_targets<R: AsRef<str>, H: AsRef<str>>(
    reference: &[R],
    hypothesis: &[H],
) -> Result<Vec<bool>, MetricsError> {
    evaluate_words(reference, hypothesis, Normalization::FULL).map(|r| r.error_targets())
}

/// One point of the uncertainty-ratio / error-recall plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyPoint {
    pub uncertainty_ratio: f64,
    pub error_recall: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
}

/// Fraction of words flagged, and fraction of erroneous words flagged
/// (1.0 when there are no errors). `targets[i]` is `true` for an error.
pub fn uncertainty_report(
    mask: &UncertaintyMask,
    targets: &[bool],
) -> Result<UncertaintyPoint, MetricsError> {
    if mask.len() != targets.len() {
        return Err(MetricsError::LengthMismatch {
            mask: mask.len(),
            targets: targets.len(),
        });
    }
    let n = targets.len();
    let uncertain = mask.uncertain_count();
    let errors = targets.iter().filter(|&&t| t).count();
    let caught = mask
        .flags
        .iter()
        .zip(targets)
        .filter(|(&u, &t)| u && t)
        .count();
    Ok(UncertaintyPoint {
        uncertainty_ratio: if n == 0 { 0.0 } else { uncertain as f64 / n as f64 },
        error_recall: if errors == 0 {
            1.0
        } else {
            caught as f64 / errors as f64
        },
        threshold: None,
    })
}

/// One point per score threshold, in the order given (expected ascending).
pub fn score_sweep(
    transcription: &Transcription,
    targets: &[bool],
    thresholds: &[f64],
) -> Result<Vec<UncertaintyPoint>, MetricsError> {
    thresholds
        .iter()
        .map(|&t| {
            let mut p = uncertainty_report(&mask_from_scores(transcription, t), targets)?;
            p.threshold = Some(t);
            Ok(p)
        })
        .collect()
}

/// Thresholds at every distinct word score plus both infinities, so a sweep
/// visits every reachable mask.
pub fn sweep_thresholds(transcription: &Transcription) -> Vec<f64> {
    let mut t: Vec<f64> = transcription.scores();
    t.sort_by(f64::total_cmp);
    t.dedup();
    // a word is flagged when score < threshold, so step just past each score
    let mut out = vec![f64::NEG_INFINITY];
    out.extend(t.iter().map(|s| s.next_up()));
    out.push(f64::INFINITY);
    out.dedup();
    out
}

/// Points not dominated by another (lower or equal ratio with higher or equal recall).
pub fn pareto_front(points: &[UncertaintyPoint]) -> Vec<UncertaintyPoint> {
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| {
        a.uncertainty_ratio
            .total_cmp(&b.uncertainty_ratio)
            .then(b.error_recall.total_cmp(&a.error_recall))
    });
    let mut front: Vec<UncertaintyPoint> = Vec::new();
    for p in sorted {
        if front.last().is_none_or(|last| p.error_recall > last.error_recall) {
            front.push(p);
        }
    }
    front
}

/// Arithmetic mean of each coordinate.
pub fn mean_point(points: &[UncertaintyPoint]) -> Option<UncertaintyPoint> {
    if points.is_empty() {
        return None;
    }
    let n = points.len() as f64;
    Some(UncertaintyPoint {
        uncertainty_ratio: points.iter().map(|p| p.uncertainty_ratio).sum::<f64>() / n,
        error_recall: points.iter().map(|p| p.error_recall).sum::<f64>() / n,
        threshold: None,
    })
}

/// CSV with one point per row.
pub fn points_to_csv(points: &[UncertaintyPoint]) -> String {
    let mut out = String::from("threshold,uncertainty_ratio,error_recall\n");
    for p in points {
        let t = p.threshold.map(|t| t.to_string()).unwrap_or_default();
        out.push_str(&format!("{t},{},{}\n", p.uncertainty_ratio, p.error_recall));
    }
    out
}
