//! Per-word certain/uncertain masks over a base transcription.

use serde::{Deserialize, Serialize};

use crate::alignment::{align, refine, EditScript, OpKind};
use crate::recognition::Transcription;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MaskError {
    #[error("script covers {script} base words but the transcription has {expected}")]
    SpanMismatch { script: usize, expected: usize },
    #[error("mask lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("cannot ensemble an empty list of masks")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskMethod {
    ScoreThreshold,
    Disagreement,
    Tta,
    Ensemble,
}

/// One flag per base word; `true` means uncertain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UncertaintyMask {
    pub flags: Vec<bool>,
    pub method: MaskMethod,
}

impl UncertaintyMask {
    pub fn len(&self) -> usize {
        self.flags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flags.is_empty()
    }

    pub fn uncertain_count(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }
}

/// Flags every word whose score is strictly below `threshold`.
pub fn mask_from_scores(transcription: &Transcription, threshold: f64) -> UncertaintyMask {
    UncertaintyMask {
        flags: transcription.words.iter().map(|w| w.score < threshold).collect(),
        method: MaskMethod::ScoreThreshold,
    }
}

/// Options for turning an edit script into a base-side mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisagreementOptions {
    /// Flag base words the other model omitted (delete ops), not just replacements.
    pub flag_deletes: bool,
}

impl Default for DisagreementOptions {
    fn default() -> Self {
        Self { flag_deletes: true }
    }
}

/// Mask plus the count of words only the other model produced, which have
/// no base word to flag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DisagreementMask {
    pub mask: UncertaintyMask,
    pub unflaggable_inserts: usize,
}

pub fn mask_from_disagreement(
    script: &EditScript,
    base_len: usize,
) -> Result<UncertaintyMask, MaskError> {
    mask_from_disagreement_with(script, base_len, DisagreementOptions::default()).map(|d| d.mask)
}

pub fn mask_from_disagreement_with(
    script: &EditScript,
    base_len: usize,
    options: DisagreementOptions,
) -> Result<DisagreementMask, MaskError> {
    if script.base_len() != base_len {
        return Err(MaskError::SpanMismatch {
            script: script.base_len(),
            expected: base_len,
        });
    }
    let mut flags = vec![false; base_len];
    let mut unflaggable_inserts = 0;
    for op in &script.ops {
        let flag = match op.kind {
            OpKind::Replace => true,
            OpKind::Delete => options.flag_deletes,
            OpKind::Insert => {
                unflaggable_inserts += op.other.len();
                false
            }
            OpKind::Equal | OpKind::Accepted => false,
        };
        if flag {
            flags[op.base.clone()].iter_mut().for_each(|f| *f = true);
        }
    }
    Ok(DisagreementMask {
        mask: UncertaintyMask {
            flags,
            method: MaskMethod::Disagreement,
        },
        unflaggable_inserts,
    })
}

/// Disagreement between the base run and a rerun on stretched audio.
pub fn mask_from_tta(base: &Transcription, stretched: &Transcription) -> UncertaintyMask {
    mask_from_tta_with(base, stretched, false)
}

/// Like [`mask_from_tta`], optionally passing the alignment through [`refine`].
pub fn mask_from_tta_with(
    base: &Transcription,
    stretched: &Transcription,
    refine_script: bool,
) -> UncertaintyMask {
    let (b, s) = (base.word_texts(), stretched.word_texts());
    let mut script = align(&b, &s);
    if refine_script {
        script = refine(&script, &b, &s);
    }
    tta_mask_from_script(&script, base.len())
}

pub(crate) fn tta_mask_from_script(script: &EditScript, base_len: usize) -> UncertaintyMask {
    let mut mask = mask_from_disagreement(script, base_len)
        .expect("script aligned against this base covers it");
    mask.method = MaskMethod::Tta;
    mask
}

/// A word is uncertain if any mask flags it.
pub fn ensemble_masks(masks: &[UncertaintyMask]) -> Result<UncertaintyMask, MaskError> {
    let first = masks.first().ok_or(MaskError::Empty)?;
    if masks.len() == 1 {
        return Ok(first.clone());
    }
    let mut flags = first.flags.clone();
    for m in &masks[1..] {
        if m.len() != flags.len() {
            return Err(MaskError::LengthMismatch(flags.len(), m.len()));
        }
        flags.iter_mut().zip(&m.flags).for_each(|(a, &b)| *a |= b);
    }
    Ok(UncertaintyMask {
        flags,
        method: MaskMethod::Ensemble,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alignment::DiffOp;
    use crate::recognition::{Reduction, TokenPiece};

    fn transcription(words: &[(&str, f64)]) -> Transcription {
        let tokens = words
            .iter()
            .map(|(w, s)| TokenPiece::text(&format!(" {w}"), *s))
            .collect();
        Transcription::from_tokens(tokens, Reduction::Min, None).unwrap()
    }

    fn mask(flags: &[bool]) -> UncertaintyMask {
        UncertaintyMask {
            flags: flags.to_vec(),
            method: MaskMethod::Disagreement,
        }
    }

    #[test]
    fn score_threshold_extremes_and_example() {
        let t = transcription(&[("a", -0.1), ("b", -2.0), ("c", -0.5)]);
        assert_eq!(mask_from_scores(&t, f64::NEG_INFINITY).uncertain_count(), 0);
        assert_eq!(mask_from_scores(&t, f64::INFINITY).uncertain_count(), 3);
        assert_eq!(mask_from_scores(&t, 0.0).uncertain_count(), 3);
        assert_eq!(mask_from_scores(&t, -0.6).flags, vec![false, true, false]);
    }

    #[test]
    fn disagreement_flags_replace_span() {
        let script = EditScript::new(vec![
            DiffOp::new(OpKind::Equal, 0..2, 0..2),
            DiffOp::new(OpKind::Replace, 2..4, 2..3),
            DiffOp::new(OpKind::Equal, 4..5, 3..4),
        ]);
        let m = mask_from_disagreement(&script, 5).unwrap();
        assert_eq!(m.flags, vec![false, false, true, true, false]);
    }

    #[test]
    fn all_equal_is_all_certain() {
        let b = ["a", "b", "c"];
        let m = mask_from_disagreement(&align(&b, &b), 3).unwrap();
        assert_eq!(m.uncertain_count(), 0);
    }

    #[test]
    fn merged_replace_is_flagged() {
        let (b, o) = (["there", "is", "no", "thing"], ["there", "is", "nothing"]);
        let script = refine(&align(&b, &o), &b, &o);
        let m = mask_from_disagreement(&script, 4).unwrap();
        assert_eq!(m.flags, vec![false, false, true, true]);
    }

    #[test]
    fn deletes_and_inserts() {
        let script = EditScript::new(vec![
            DiffOp::new(OpKind::Delete, 0..1, 0..0),
            DiffOp::new(OpKind::Equal, 1..2, 0..1),
            DiffOp::new(OpKind::Insert, 2..2, 1..3),
        ]);
        let d = mask_from_disagreement_with(&script, 2, DisagreementOptions::default()).unwrap();
        assert_eq!(d.mask.flags, vec![true, false]);
        assert_eq!(d.unflaggable_inserts, 2);
        let d = mask_from_disagreement_with(&script, 2, DisagreementOptions { flag_deletes: false })
            .unwrap();
        assert_eq!(d.mask.flags, vec![false, false]);
        assert!(mask_from_disagreement(&script, 3).is_err());
    }

    #[test]
    fn tta_cases() {
        let base = transcription(&[("the", -0.1), ("cat", -0.1), ("sat", -0.1)]);
        assert_eq!(mask_from_tta(&base, &base).uncertain_count(), 0);
        let stretched = transcription(&[("the", -0.1), ("hat", -0.1), ("sat", -0.1)]);
        assert_eq!(mask_from_tta(&base, &stretched).flags, vec![false, true, false]);
        let empty = Transcription::default();
        assert_eq!(mask_from_tta(&base, &empty).flags, vec![true; 3]);
        assert_eq!(mask_from_tta(&base, &empty).method, MaskMethod::Tta);
    }

    #[test]
    fn ensemble_basics() {
        let a = mask(&[true, false]);
        assert_eq!(ensemble_masks(std::slice::from_ref(&a)).unwrap(), a);
        let out = ensemble_masks(&[a, mask(&[false, false])]).unwrap();
        assert_eq!(out.flags, vec![true, false]);
        assert_eq!(out.method, MaskMethod::Ensemble);
        assert_eq!(ensemble_masks(&[]), Err(MaskError::Empty));
        assert!(ensemble_masks(&[mask(&[true]), mask(&[true, false])]).is_err());
    }
}
