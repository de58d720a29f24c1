//! Frame-level speech probabilities to speech segments and
//! recognition-sized chunks.
//!
//! The flow is [`binarize`] (hysteresis thresholds) → [`smooth`] (fill short
//! gaps, drop short blips) → [`cut_and_merge`] (cap every chunk at
//! `max_chunk_s`, cutting at the quietest frame and merging close
//! neighbours). [`uniform_chunks`] is the fixed-window baseline.

use serde::{Deserialize, Serialize};

use crate::audio::AudioBuffer;
use crate::backend::{BackendError, Concurrency};

#[derive(Debug, thiserror::Error)]
pub enum SegmentationError {
    #[error("thresholds must satisfy 0 < offset <= onset < 1 (onset={onset}, offset={offset})")]
    InvalidThresholds { onset: f64, offset: f64 },
    #[error("negative duration: {0}")]
    NegativeDuration(String),
    #[error("duration must be positive, got {0}")]
    NonPositiveDuration(f64),
    #[error("invalid frame series: {0}")]
    InvalidSeries(String),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

/// Per-frame speech probabilities at a fixed hop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameProbSeries {
    probs: Vec<f64>,
    frame_hop_s: f64,
}

impl FrameProbSeries {
    pub fn new(probs: Vec<f64>, frame_hop_s: f64) -> Result<Self, SegmentationError> {
        if !(frame_hop_s > 0.0 && frame_hop_s.is_finite()) {
            return Err(SegmentationError::InvalidSeries(format!(
                "frame hop must be positive, got {frame_hop_s}"
            )));
        }
        if let Some((i, p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !(0.0..=1.0).contains(*p))
        {
            return Err(SegmentationError::InvalidSeries(format!(
                "probability {p} at frame {i} is outside [0, 1]"
            )));
        }
        Ok(Self { probs, frame_hop_s })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn frame_hop_s(&self) -> f64 {
        self.frame_hop_s
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.probs.len() as f64 * self.frame_hop_s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeechSegment {
    pub start_s: f64,
    pub end_s: f64,
}

impl SpeechSegment {
    pub fn new(start_s: f64, end_s: f64) -> Self {
        Self { start_s, end_s }
    }

    pub fn duration(&self) -> f64 {
        self.end_s - self.start_s
    }
}

/// A span handed to the recognizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chunk {
    pub start_s: f64,
    pub end_s: f64,
    /// Indices of the speech segments the chunk was built from.
    pub source_segment_ids: Vec<usize>,
}

impl Chunk {
    pub fn new(start_s: f64, end_s: f64) -> Self {
        Self {
            start_s,
            end_s,
            source_segment_ids: Vec::new(),
        }
    }

    pub fn duration(&self) -> f64 {
        self.end_s - self.start_s
    }

    /// Same chunk with both boundaries multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Chunk {
        Chunk {
            start_s: self.start_s * factor,
            end_s: self.end_s * factor,
            source_segment_ids: self.source_segment_ids.clone(),
        }
    }
}

/// Tunables for segmentation; defaults follow common VAD hysteresis settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentationParams {
    pub onset: f64,
    pub offset: f64,
    pub min_on_s: f64,
    pub min_off_s: f64,
    pub max_chunk_s: f64,
    pub merge_gap_s: f64,
}

impl Default for SegmentationParams {
    fn default() -> Self {
        Self {
            onset: 0.5,
            offset: 0.35,
            min_on_s: 0.25,
            min_off_s: 0.2,
            max_chunk_s: 30.0,
            merge_gap_s: 1.0,
        }
    }
}

/// Hysteresis thresholding: a segment opens at the first frame with
/// `p >= onset` and closes at the next frame with `p < offset`.
pub fn binarize(
    series: &FrameProbSeries,
    onset: f64,
    offset: f64,
) -> Result<Vec<SpeechSegment>, SegmentationError> {
    if !(offset > 0.0 && offset <= onset && onset < 1.0) {
        return Err(SegmentationError::InvalidThresholds { onset, offset });
    }
    let hop = series.frame_hop_s();
    let mut segments = Vec::new();
    let mut open: Option<usize> = None;
    for (i, &p) in series.probs().iter().enumerate() {
        match open {
            None if p >= onset => open = Some(i),
            Some(start) if p < offset => {
                segments.push(SpeechSegment::new(start as f64 * hop, i as f64 * hop));
                open = None;
            }
            _ => {}
        }
    }
    if let Some(start) = open {
        segments.push(SpeechSegment::new(start as f64 * hop, series.len() as f64 * hop));
    }
    Ok(segments)
}

/// Fills gaps shorter than `min_off_s`, then drops segments shorter than `min_on_s`.
pub fn smooth(
    segments: &[SpeechSegment],
    min_on_s: f64,
    min_off_s: f64,
) -> Result<Vec<SpeechSegment>, SegmentationError> {
    if min_on_s < 0.0 || min_off_s < 0.0 {
        return Err(SegmentationError::NegativeDuration(format!(
            "min_on_s={min_on_s}, min_off_s={min_off_s}"
        )));
    }
    if let Some(seg) = segments.iter().find(|s| s.end_s < s.start_s) {
        return Err(SegmentationError::NegativeDuration(format!(
            "segment ({}, {})",
            seg.start_s, seg.end_s
        )));
    }
    let mut filled: Vec<SpeechSegment> = Vec::with_capacity(segments.len());
    for seg in segments {
        match filled.last_mut() {
            Some(prev) if seg.start_s - prev.end_s < min_off_s => {
                prev.end_s = prev.end_s.max(seg.end_s)
            }
            _ => filled.push(*seg),
        }
    }
    filled.retain(|s| s.duration() >= min_on_s);
    Ok(filled)
}

/// Caps chunk length at `max_chunk_s`: over-long segments are cut at the
/// lowest-probability frame inside their central half (recursively), then
/// neighbours separated by at most `merge_gap_s` are merged while the merged
/// span still fits.
pub fn cut_and_merge(
    segments: &[SpeechSegment],
    series: &FrameProbSeries,
    max_chunk_s: f64,
    merge_gap_s: f64,
) -> Result<Vec<Chunk>, SegmentationError> {
    if !(max_chunk_s > 0.0) {
        return Err(SegmentationError::NonPositiveDuration(max_chunk_s));
    }
    if merge_gap_s < 0.0 {
        return Err(SegmentationError::NegativeDuration(format!(
            "merge_gap_s={merge_gap_s}"
        )));
    }
    let mut pieces: Vec<(SpeechSegment, usize)> = Vec::new();
    for (id, seg) in segments.iter().enumerate() {
        if seg.end_s < seg.start_s {
            return Err(SegmentationError::NegativeDuration(format!(
                "segment ({}, {})",
                seg.start_s, seg.end_s
            )));
        }
        let mut cut = Vec::new();
        cut_recursive(*seg, series, max_chunk_s, &mut cut);
        pieces.extend(cut.into_iter().map(|p| (p, id)));
    }

    let mut chunks: Vec<Chunk> = Vec::new();
    for (piece, id) in pieces {
        if let Some(cur) = chunks.last_mut() {
            if piece.start_s - cur.end_s <= merge_gap_s && piece.end_s - cur.start_s <= max_chunk_s
            {
                cur.end_s = cur.end_s.max(piece.end_s);
                if cur.source_segment_ids.last() != Some(&id) {
                    cur.source_segment_ids.push(id);
                }
                continue;
            }
        }
        chunks.push(Chunk {
            start_s: piece.start_s,
            end_s: piece.end_s,
            source_segment_ids: vec![id],
        });
    }
    chunks.retain(|c| c.duration() > 0.0);
    Ok(chunks)
}

fn cut_recursive(
    seg: SpeechSegment,
    series: &FrameProbSeries,
    max_chunk_s: f64,
    out: &mut Vec<SpeechSegment>,
) {
    if seg.duration() <= max_chunk_s {
        out.push(seg);
        return;
    }
    let cut = cut_point(seg, series);
    cut_recursive(SpeechSegment::new(seg.start_s, cut), series, max_chunk_s, out);
    cut_recursive(SpeechSegment::new(cut, seg.end_s), series, max_chunk_s, out);
}

/// Time of the quietest frame in the central half of `seg` (earliest on
/// ties), or the midpoint when that window holds no frame.
fn cut_point(seg: SpeechSegment, series: &FrameProbSeries) -> f64 {
    let quarter = seg.duration() / 4.0;
    let (lo, hi) = (seg.start_s + quarter, seg.end_s - quarter);
    let hop = series.frame_hop_s();
    let midpoint = (seg.start_s + seg.end_s) / 2.0;
    if series.is_empty() {
        return midpoint;
    }
    let first = (lo / hop).ceil().max(0.0) as usize;
    let last = ((hi / hop).floor().max(0.0) as usize).min(series.len() - 1);
    let best = (first..=last)
        .filter(|&i| {
            let t = i as f64 * hop;
            t > seg.start_s && t < seg.end_s
        })
        .fold(None::<usize>, |best, i| match best {
            Some(b) if series.probs()[b] <= series.probs()[i] => Some(b),
            _ => Some(i),
        });
    best.map_or(midpoint, |i| i as f64 * hop)
}

/// Back-to-back windows of `chunk_s` covering `[0, total_duration_s]`.
pub fn uniform_chunks(
    total_duration_s: f64,
    chunk_s: f64,
) -> Result<Vec<Chunk>, SegmentationError> {
    if !(total_duration_s > 0.0) {
        return Err(SegmentationError::NonPositiveDuration(total_duration_s));
    }
    if !(chunk_s > 0.0) {
        return Err(SegmentationError::NonPositiveDuration(chunk_s));
    }
    let mut chunks = Vec::new();
    let mut i = 0usize;
    loop {
        let start = i as f64 * chunk_s;
        if start >= total_duration_s {
            break;
        }
        let end = ((i + 1) as f64 * chunk_s).min(total_duration_s);
        chunks.push(Chunk {
            start_s: start,
            end_s: end,
            source_segment_ids: Vec::new(),
        });
        i += 1;
    }
    Ok(chunks)
}

/// Backend producing per-frame speech probabilities for a whole recording.
pub trait FrameClassifier: Send + Sync {
    fn classify_frames(&self, audio: &AudioBuffer) -> Result<FrameProbSeries, BackendError>;

    fn concurrency(&self) -> Concurrency {
        Concurrency::Parallel
    }
}

/// Frames a backend may be off by before the series is rejected.
const FRAME_COUNT_SLACK: usize = 2;

/// Runs `backend` and conforms the series to `ceil(duration / hop)` frames.
///
/// Models with a receptive field commonly emit a frame or two fewer than
/// the nominal count; such series are padded with their last value (or
/// truncated). Larger mismatches are protocol errors.
pub fn frame_probs(
    buffer: &AudioBuffer,
    backend: &dyn FrameClassifier,
) -> Result<FrameProbSeries, SegmentationError> {
    let series = backend.classify_frames(buffer)?;
    let hop = series.frame_hop_s();
    let expected = expected_frames(buffer.duration_seconds(), hop);
    let got = series.len();
    if got.abs_diff(expected) > FRAME_COUNT_SLACK {
        return Err(BackendError::Protocol(format!(
            "frame classifier returned {got} frames, expected {expected}"
        ))
        .into());
    }
    let mut probs = series.probs;
    let pad = probs.last().copied().unwrap_or(0.0);
    probs.resize(expected, pad);
    FrameProbSeries::new(probs, hop)
}

pub fn expected_frames(duration_s: f64, hop_s: f64) -> usize {
    // guard against 1.0000000002-style float noise
    let ratio = duration_s / hop_s;
    let rounded = ratio.round();
    if (ratio - rounded).abs() < 1e-9 {
        rounded as usize
    } else {
        ratio.ceil() as usize
    }
}

/// Speech probability per frame as `1 - P(blank)` from CTC logits
/// (`frames × vocab`), applying a softmax per row.
pub fn speech_probs_from_ctc_logits(logits: &[Vec<f32>], blank_index: usize) -> Vec<f64> {
    logits
        .iter()
        .map(|row| {
            let max = row.iter().copied().fold(f32::NEG_INFINITY, f32::max) as f64;
            let denom: f64 = row.iter().map(|&v| (v as f64 - max).exp()).sum();
            let blank = row
                .get(blank_index)
                .map(|&v| (v as f64 - max).exp() / denom)
                .unwrap_or(0.0);
            (1.0 - blank).clamp(0.0, 1.0)
        })
        .collect()
}

/// Model-free frame classifier: frame RMS in dBFS squashed by a logistic.
#[derive(Debug, Clone, Copy)]
pub struct EnergyFrameClassifier {
    pub frame_hop_s: f64,
    /// Level (dBFS) mapped to probability 0.5.
    pub threshold_db: f64,
    /// Logistic slope per dB.
    pub slope: f64,
}

impl Default for EnergyFrameClassifier {
    fn default() -> Self {
        Self {
            frame_hop_s: 0.02,
            threshold_db: -40.0,
            slope: 0.5,
        }
    }
}

impl EnergyFrameClassifier {
    pub fn probability(&self, frame: &[f32]) -> f64 {
        if frame.is_empty() {
            return 0.0;
        }
        let energy: f64 =
            frame.iter().map(|&s| (s as f64) * (s as f64)).sum::<f64>() / frame.len() as f64;
        if energy <= 0.0 {
            return 0.0;
        }
        let db = 10.0 * energy.log10();
        1.0 / (1.0 + (-self.slope * (db - self.threshold_db)).exp())
    }
}

impl FrameClassifier for EnergyFrameClassifier {
    fn classify_frames(&self, audio: &AudioBuffer) -> Result<FrameProbSeries, BackendError> {
        let rate = audio.sample_rate() as f64;
        let n_frames = expected_frames(audio.duration_seconds(), self.frame_hop_s);
        let samples = audio.samples();
        let probs = (0..n_frames)
            .map(|i| {
                let a = ((i as f64 * self.frame_hop_s * rate).round() as usize).min(samples.len());
                let b = (((i + 1) as f64 * self.frame_hop_s * rate).round() as usize)
                    .min(samples.len());
                self.probability(&samples[a..b])
            })
            .collect();
        FrameProbSeries::new(probs, self.frame_hop_s)
            .map_err(|e| BackendError::Protocol(e.to_string()))
    }
}

/// Returns a fixed series regardless of input.
#[derive(Debug, Clone)]
pub struct ScriptedFrameClassifier {
    pub series: FrameProbSeries,
}

impl FrameClassifier for ScriptedFrameClassifier {
    fn classify_frames(&self, _audio: &AudioBuffer) -> Result<FrameProbSeries, BackendError> {
        Ok(self.series.clone())
    }
}
