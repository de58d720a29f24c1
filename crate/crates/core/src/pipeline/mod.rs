//! End-to-end orchestration: read → chunk → filter → recognize → uncertainty.

mod backends;
pub mod config;
pub mod evaluate;
pub mod output;
pub mod timing;

use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

pub use backends::{BackendFactory, Backends};
pub use config::{
    BackendEndpoints, Chunking, ConfigError, MaskSource, OutputConfig, PipelineConfig,
    UncertaintyMode,
};
pub use timing::{Spread, StageTime, TimingReport, TimingSummary};

use crate::alignment::{align, drop_script_mismatch_diffs, lm_validate, refine, EditScript};
use crate::audio::{read_wav, stretch, AudioBuffer, PIPELINE_SAMPLE_RATE};
use crate::backend::{BackendError, CallGuard};
use crate::filtering::filter_chunks;
use crate::recognition::{recognize_scaled, Recognizer, Transcription};
use crate::segmentation::{binarize, cut_and_merge, frame_probs, smooth, uniform_chunks, Chunk};
use crate::uncertainty::{
    ensemble_masks, mask_from_disagreement_with, mask_from_scores, tta_mask_from_script,
    DisagreementOptions, MaskMethod, UncertaintyMask,
};
use timing::Stopwatch;

type BoxError = Box<dyn std::error::Error + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Read,
    FrameProbs,
    Segmentation,
    Filter,
    Recognize,
    Uncertainty,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Read => "read",
            Stage::FrameProbs => "frame_probs",
            Stage::Segmentation => "segmentation",
            Stage::Filter => "filter",
            Stage::Recognize => "recognize",
            Stage::Uncertainty => "uncertainty",
        }
    }
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("{stage} stage failed{}: {source}", .chunk.map(|c| format!(" on chunk {c}")).unwrap_or_default())]
    Stage {
        stage: Stage,
        chunk: Option<usize>,
        #[source]
        source: BoxError,
    },
    #[error(transparent)]
    Config(#[from] ConfigError),
}

impl PipelineError {
    fn at(stage: Stage, source: impl Into<BoxError>) -> Self {
        PipelineError::Stage {
            stage,
            chunk: None,
            source: source.into(),
        }
    }

    pub fn stage(&self) -> Option<Stage> {
        match self {
            PipelineError::Stage { stage, .. } => Some(*stage),
            PipelineError::Config(_) => None,
        }
    }
}

/// Counters that explain a run without affecting its transcript.
#[derive(Debug, Clone, Default, PartialEq, serde::Serialize)]
pub struct Diagnostics {
    pub chunks: usize,
    pub rejected_chunks: usize,
    /// Words only the additional model produced; a base-side mask cannot show them.
    pub unflaggable_inserts: usize,
}

#[derive(Debug, Clone)]
pub struct PipelineResult {
    pub transcription: Transcription,
    pub mask: Option<UncertaintyMask>,
    pub timing: TimingReport,
    pub chunks: Vec<Chunk>,
    pub rejected: Vec<Chunk>,
    pub diagnostics: Diagnostics,
}

/// Reads `audio_path` and runs the whole chain.
pub fn run_pipeline(
    audio_path: impl AsRef<Path>,
    config: &PipelineConfig,
    backends: &Backends,
) -> Result<PipelineResult, PipelineError> {
    config.validate()?;
    let mut watch = Stopwatch::start();
    let buffer = watch
        .time(Stage::Read.name(), || {
            read_wav(audio_path.as_ref()).and_then(|b| b.to_rate(PIPELINE_SAMPLE_RATE))
        })
        .map_err(|e| PipelineError::at(Stage::Read, e))?;
    run_with_watch(&buffer, config, backends, watch)
}

/// Runs the chain on audio already in memory.
pub fn run_on_buffer(
    buffer: &AudioBuffer,
    config: &PipelineConfig,
    backends: &Backends,
) -> Result<PipelineResult, PipelineError> {
    config.validate()?;
    let buffer = buffer
        .to_rate(PIPELINE_SAMPLE_RATE)
        .map_err(|e| PipelineError::at(Stage::Read, e))?;
    run_with_watch(&buffer, config, backends, Stopwatch::start())
}

fn missing(what: &str) -> ConfigError {
    ConfigError::Invalid(format!("this configuration needs a {what} backend"))
}

fn run_with_watch(
    buffer: &AudioBuffer,
    config: &PipelineConfig,
    backends: &Backends,
    mut watch: Stopwatch,
) -> Result<PipelineResult, PipelineError> {
    check_backends(config, backends)?;
    if buffer.is_empty() {
        return Err(PipelineError::at(Stage::Read, "audio has no samples"));
    }

    let chunks = match config.chunking {
        Chunking::Smart => {
            let series = watch
                .time(Stage::FrameProbs.name(), || {
                    frame_probs(buffer, backends.frame_classifier.as_ref())
                })
                .map_err(|e| PipelineError::at(Stage::FrameProbs, e))?;
            let p = &config.segmentation;
            watch.time(Stage::Segmentation.name(), || {
                let segs = binarize(&series, p.onset, p.offset)?;
                let segs = smooth(&segs, p.min_on_s, p.min_off_s)?;
                cut_and_merge(&segs, &series, p.max_chunk_s, p.merge_gap_s)
            })
        }
        Chunking::Uniform => watch.time(Stage::Segmentation.name(), || {
            uniform_chunks(buffer.duration_seconds(), config.uniform_chunk_s)
        }),
    }
    .map_err(|e| PipelineError::at(Stage::Segmentation, e))?;

    let (chunks, rejected) = match (&backends.segment_classifier, config.ast_filter) {
        (Some(classifier), true) => {
            let outcome = watch
                .time(Stage::Filter.name(), || {
                    filter_chunks(
                        &chunks,
                        buffer,
                        classifier.as_ref(),
                        &config.speech_labels,
                        config.filter_threshold,
                    )
                })
                .map_err(|e| PipelineError::at(Stage::Filter, e))?;
            (outcome.kept, outcome.rejected)
        }
        _ => (chunks, Vec::new()),
    };

    let parts = watch.time(Stage::Recognize.name(), || {
        recognize_chunks(
            buffer,
            &chunks,
            backends.recognizer.as_ref(),
            config,
            1.0,
        )
    })?;
    let transcription = Transcription::concat(parts.iter().cloned());

    let mut diagnostics = Diagnostics {
        chunks: chunks.len(),
        rejected_chunks: rejected.len(),
        unflaggable_inserts: 0,
    };
    let mask = if config.uncertainty == UncertaintyMode::None {
        None
    } else {
        let m = watch.time(Stage::Uncertainty.name(), || {
            uncertainty_mask(buffer, &chunks, &parts, &transcription, config, backends, &mut diagnostics)
        })?;
        Some(m)
    };

    Ok(PipelineResult {
        transcription,
        mask,
        timing: watch.finish(),
        chunks,
        rejected,
        diagnostics,
    })
}

fn check_backends(config: &PipelineConfig, backends: &Backends) -> Result<(), ConfigError> {
    if config.ast_filter && backends.segment_classifier.is_none() {
        return Err(missing("segment classifier (or turn ast_filter off)"));
    }
    if config.uncertainty_uses(MaskSource::Disagreement) {
        if backends.additional_recognizer.is_none() {
            return Err(missing("additional recognizer"));
        }
        if config.lm_validation && backends.scorer.is_none() {
            return Err(missing("sequence scorer"));
        }
    }
    Ok(())
}

/// Runs `f(i)` for `i in 0..n` on at most `workers` threads and returns the
/// results in index order.
pub fn map_indexed<T: Send>(n: usize, workers: usize, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    let workers = workers.clamp(1, n.max(1));
    if workers == 1 {
        return (0..n).map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let mut done: Vec<(usize, T)> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                s.spawn(|| {
                    let mut mine = Vec::new();
                    loop {
                        let i = next.fetch_add(1, Ordering::Relaxed);
                        if i >= n {
                            break mine;
                        }
                        mine.push((i, f(i)));
                    }
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker panicked"))
            .collect()
    });
    done.sort_by_key(|(i, _)| *i);
    done.into_iter().map(|(_, t)| t).collect()
}

/// Recognizes every chunk concurrently; the first failure in chunk order wins.
fn recognize_chunks(
    buffer: &AudioBuffer,
    chunks: &[Chunk],
    recognizer: &dyn Recognizer,
    config: &PipelineConfig,
    time_scale: f64,
) -> Result<Vec<Transcription>, PipelineError> {
    let guard = CallGuard::default();
    let results = map_indexed(chunks.len(), config.worker_count, |i| {
        let _lock = guard.enter(recognizer.concurrency());
        recognize_scaled(
            buffer,
            &chunks[i],
            recognizer,
            config.reduction,
            time_scale,
            Some(i),
        )
    });
    results
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            r.map_err(|e| PipelineError::Stage {
                stage: Stage::Recognize,
                chunk: Some(i),
                source: e.into(),
            })
        })
        .collect()
}

/// Consistency check between the base transcript of one chunk and another
/// model's: align, refine, drop script mismatches, optionally LM-validate.
pub fn consistency_script(
    base: &Transcription,
    other: &Transcription,
    scorer: Option<&dyn crate::alignment::SequenceScorer>,
    config: &PipelineConfig,
) -> Result<EditScript, BackendError> {
    let (b, o) = (base.word_texts(), other.word_texts());
    let script = refine(&align(&b, &o), &b, &o);
    let script = drop_script_mismatch_diffs(&script, &b, &o);
    match scorer {
        Some(lm) if config.lm_validation => lm_validate(&script, &b, &o, lm, config.lookahead),
        _ => Ok(script),
    }
}

fn uncertainty_err(e: impl Into<BoxError>) -> PipelineError {
    PipelineError::at(Stage::Uncertainty, e)
}

fn uncertainty_mask(
    buffer: &AudioBuffer,
    chunks: &[Chunk],
    parts: &[Transcription],
    transcription: &Transcription,
    config: &PipelineConfig,
    backends: &Backends,
    diagnostics: &mut Diagnostics,
) -> Result<UncertaintyMask, PipelineError> {
    let mut masks = Vec::new();
    if config.uncertainty_uses(MaskSource::Scores) {
        masks.push(mask_from_scores(transcription, config.score_threshold));
    }
    if config.uncertainty_uses(MaskSource::Disagreement) {
        let other = backends
            .additional_recognizer
            .as_ref()
            .ok_or_else(|| missing("additional recognizer"))?;
        let others = recognize_chunks(buffer, chunks, other.as_ref(), config, 1.0)?;
        let scorer = backends.scorer.as_deref();
        let scripts = parts
            .iter()
            .zip(&others)
            .map(|(b, o)| consistency_script(b, o, scorer, config))
            .collect::<Result<Vec<_>, _>>()
            .map_err(uncertainty_err)?;
        let d = mask_from_disagreement_with(
            &EditScript::concat(scripts),
            transcription.len(),
            DisagreementOptions {
                flag_deletes: config.flag_deletes,
            },
        )
        .map_err(uncertainty_err)?;
        diagnostics.unflaggable_inserts = d.unflaggable_inserts;
        masks.push(d.mask);
    }
    if config.uncertainty_uses(MaskSource::Tta) {
        let stretched = stretch(buffer, config.stretch_up, config.stretch_down).map_err(uncertainty_err)?;
        let factor = config.stretch_up as f64 / config.stretch_down as f64;
        let scaled: Vec<Chunk> = chunks.iter().map(|c| c.scaled(factor)).collect();
        let recognizer: Arc<dyn Recognizer> = backends
            .tta_recognizer
            .clone()
            .unwrap_or_else(|| backends.recognizer.clone());
        let reruns = recognize_chunks(&stretched, &scaled, recognizer.as_ref(), config, factor)?;
        let scripts = parts.iter().zip(&reruns).map(|(b, s)| {
            let (bw, sw) = (b.word_texts(), s.word_texts());
            let script = align(&bw, &sw);
            if config.tta_refine {
                refine(&script, &bw, &sw)
            } else {
                script
            }
        });
        masks.push(tta_mask_from_script(&EditScript::concat(scripts), transcription.len()));
    }
    let mut mask = ensemble_masks(&masks).map_err(uncertainty_err)?;
    if config.uncertainty == UncertaintyMode::Ensemble {
        mask.method = MaskMethod::Ensemble;
    }
    Ok(mask)
}
