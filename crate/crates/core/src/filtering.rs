//! Drops chunks that a segment-level audio classifier does not consider speech.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::audio::AudioBuffer;
use crate::backend::{BackendError, CallGuard, Concurrency};
use crate::segmentation::{Chunk, EnergyFrameClassifier};

#[derive(Debug, thiserror::Error)]
pub enum FilterError {
    #[error("speech label set is empty")]
    NoSpeechLabels,
    #[error("threshold must lie in [0, 1], got {0}")]
    InvalidThreshold(f64),
    #[error("chunk ({start}, {end}) lies outside the {duration} s buffer")]
    ChunkOutOfRange { start: f64, end: f64, duration: f64 },
    #[error(transparent)]
    Backend(#[from] BackendError),
}

/// Label → score map returned by a segment classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SegmentLabelScores {
    scores: BTreeMap<String, f64>,
}

impl SegmentLabelScores {
    pub fn new(scores: BTreeMap<String, f64>) -> Result<Self, BackendError> {
        if scores.is_empty() {
            return Err(BackendError::Protocol("classifier returned no labels".into()));
        }
        if let Some((label, s)) = scores.iter().find(|(_, s)| !(0.0..=1.0).contains(*s)) {
            return Err(BackendError::Protocol(format!(
                "score {s} for label {label:?} is outside [0, 1]"
            )));
        }
        Ok(Self { scores })
    }

    pub fn get(&self, label: &str) -> Option<f64> {
        self.scores.get(label).copied()
    }

    pub fn scores(&self) -> &BTreeMap<String, f64> {
        &self.scores
    }

    /// Highest score among `labels`; absent labels count as 0.
    pub fn max_over<'a>(&self, labels: impl IntoIterator<Item = &'a String>) -> f64 {
        labels
            .into_iter()
            .filter_map(|l| self.get(l))
            .fold(0.0, f64::max)
    }
}

/// AudioSet speech labels used when none are configured.
pub fn default_speech_labels() -> BTreeSet<String> {
    [
        "Speech",
        "Male speech, man speaking",
        "Female speech, woman speaking",
        "Narration, monologue",
    ]
    .into_iter()
    .map(String::from)
    .collect()
}

pub const DEFAULT_THRESHOLD: f64 = 0.3;

/// Backend scoring an audio slice against a label ontology.
pub trait SegmentClassifier: Send + Sync {
    fn classify_segment(&self, audio: &AudioBuffer) -> Result<SegmentLabelScores, BackendError>;

    fn concurrency(&self) -> Concurrency {
        Concurrency::Parallel
    }
}

pub fn classify_chunk(
    buffer: &AudioBuffer,
    chunk: &Chunk,
    backend: &dyn SegmentClassifier,
) -> Result<SegmentLabelScores, FilterError> {
    let duration = buffer.duration_seconds();
    // one sample of slack for boundaries computed from frame indices
    let slack = 1.0 / buffer.sample_rate() as f64;
    if chunk.start_s < 0.0 || chunk.end_s > duration + slack || chunk.end_s < chunk.start_s {
        return Err(FilterError::ChunkOutOfRange {
            start: chunk.start_s,
            end: chunk.end_s,
            duration,
        });
    }
    let slice = buffer.slice_seconds(chunk.start_s, chunk.end_s);
    let scores = backend.classify_segment(&slice)?;
    Ok(SegmentLabelScores::new(scores.scores)?)
}

/// Chunks split by whether any speech label reaches `threshold`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FilterOutcome {
    pub kept: Vec<Chunk>,
    pub rejected: Vec<Chunk>,
}

pub fn filter_chunks(
    chunks: &[Chunk],
    buffer: &AudioBuffer,
    backend: &dyn SegmentClassifier,
    speech_labels: &BTreeSet<String>,
    threshold: f64,
) -> Result<FilterOutcome, FilterError> {
    if speech_labels.is_empty() {
        return Err(FilterError::NoSpeechLabels);
    }
    if !(0.0..=1.0).contains(&threshold) {
        return Err(FilterError::InvalidThreshold(threshold));
    }
    let guard = CallGuard::default();
    let mut outcome = FilterOutcome::default();
    for chunk in chunks {
        let scores = {
            let _lock = guard.enter(backend.concurrency());
            classify_chunk(buffer, chunk, backend)?
        };
        if scores.max_over(speech_labels) >= threshold {
            outcome.kept.push(chunk.clone());
        } else {
            outcome.rejected.push(chunk.clone());
        }
    }
    Ok(outcome)
}

/// Energy-based stand-in for an audio-event classifier: the mean frame
/// speech probability of the slice is reported as `"Speech"`.
#[derive(Debug, Clone, Copy, Default)]
pub struct EnergySegmentClassifier {
    pub frames: EnergyFrameClassifier,
}

impl SegmentClassifier for EnergySegmentClassifier {
    fn classify_segment(&self, audio: &AudioBuffer) -> Result<SegmentLabelScores, BackendError> {
        use crate::segmentation::FrameClassifier;
        let series = self.frames.classify_frames(audio)?;
        let speech = if series.is_empty() {
            0.0
        } else {
            series.probs().iter().sum::<f64>() / series.len() as f64
        };
        SegmentLabelScores::new(BTreeMap::from([
            ("Speech".to_string(), speech),
            ("Silence".to_string(), 1.0 - speech),
        ]))
    }
}

/// Returns scripted scores in call order, cycling when exhausted.
#[derive(Debug)]
pub struct ScriptedSegmentClassifier {
    responses: Vec<SegmentLabelScores>,
    next: std::sync::atomic::AtomicUsize,
}

impl ScriptedSegmentClassifier {
    pub fn new(responses: Vec<SegmentLabelScores>) -> Self {
        Self {
            responses,
            next: Default::default(),
        }
    }

    /// Same label map for every call.
    pub fn constant(scores: SegmentLabelScores) -> Self {
        Self::new(vec![scores])
    }
}

impl SegmentClassifier for ScriptedSegmentClassifier {
    fn classify_segment(&self, _audio: &AudioBuffer) -> Result<SegmentLabelScores, BackendError> {
        if self.responses.is_empty() {
            return Err(BackendError::Failed("no scripted responses".into()));
        }
        let i = self.next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
        Ok(self.responses[i % self.responses.len()].clone())
    }

    fn concurrency(&self) -> Concurrency {
        // call order matters for the script
        Concurrency::Serial
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn speech(score: f64) -> SegmentLabelScores {
        SegmentLabelScores::new(BTreeMap::from([("Speech".to_string(), score)])).unwrap()
    }

    fn chunks(n: usize) -> Vec<Chunk> {
        (0..n).map(|i| Chunk::new(i as f64, i as f64 + 1.0)).collect()
    }

    #[test]
    fn label_scores_validated() {
        assert!(SegmentLabelScores::new(BTreeMap::new()).is_err());
        assert!(SegmentLabelScores::new(BTreeMap::from([("x".into(), 1.5)])).is_err());
    }

    #[test]
    fn scripted_scores_pass_through() {
        let audio = AudioBuffer::silence(2.0, 16000).unwrap();
        let multi = SegmentLabelScores::new(BTreeMap::from([
            ("Speech".to_string(), 0.4),
            ("Music".to_string(), 0.7),
        ]))
        .unwrap();
        let backend = ScriptedSegmentClassifier::constant(multi.clone());
        let out = classify_chunk(&audio, &Chunk::new(0.0, 1.0), &backend).unwrap();
        assert_eq!(out, multi);
    }

    #[test]
    fn chunk_outside_buffer_is_rejected() {
        let audio = AudioBuffer::silence(1.0, 16000).unwrap();
        let backend = ScriptedSegmentClassifier::constant(speech(0.9));
        assert!(matches!(
            classify_chunk(&audio, &Chunk::new(0.5, 3.0), &backend),
            Err(FilterError::ChunkOutOfRange { .. })
        ));
    }

    #[test]
    fn vacuous_and_total_filters() {
        let audio = AudioBuffer::silence(5.0, 16000).unwrap();
        let labels = default_speech_labels();
        let backend = ScriptedSegmentClassifier::constant(speech(0.9));
        let all = filter_chunks(&chunks(3), &audio, &backend, &labels, 0.0).unwrap();
        assert_eq!(all.kept.len(), 3);
        let none = filter_chunks(&chunks(3), &audio, &backend, &labels, 1.0).unwrap();
        assert_eq!(none.rejected.len(), 3);
    }

    #[test]
    fn mixed_scores_keep_second_and_third() {
        let audio = AudioBuffer::silence(5.0, 16000).unwrap();
        let backend = ScriptedSegmentClassifier::new(vec![speech(0.2), speech(0.8), speech(0.5)]);
        let input = chunks(3);
        let out = filter_chunks(&input, &audio, &backend, &default_speech_labels(), 0.5).unwrap();
        // oracle: direct comparison of each scripted score against the threshold
        let expected: Vec<Chunk> = [0.2, 0.8, 0.5]
            .iter()
            .zip(&input)
            .filter(|(s, _)| **s >= 0.5)
            .map(|(_, c)| c.clone())
            .collect();
        assert_eq!(out.kept, expected);
        assert_eq!(out.rejected, vec![input[0].clone()]);
    }

    #[test]
    fn empty_labels_and_bad_threshold() {
        let audio = AudioBuffer::silence(1.0, 16000).unwrap();
        let backend = ScriptedSegmentClassifier::constant(speech(0.9));
        assert!(matches!(
            filter_chunks(&chunks(1), &audio, &backend, &BTreeSet::new(), 0.5),
            Err(FilterError::NoSpeechLabels)
        ));
        assert!(filter_chunks(&chunks(1), &audio, &backend, &default_speech_labels(), 1.5).is_err());
    }

    #[test]
    fn energy_mock_on_silence() {
        let audio = AudioBuffer::silence(2.0, 16000).unwrap();
        let scores = classify_chunk(&audio, &Chunk::new(0.0, 2.0), &EnergySegmentClassifier::default())
            .unwrap();
        assert!(scores.get("Speech").unwrap() < 0.1);
    }
}
