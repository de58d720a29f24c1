//! Corpus evaluation: WER, error targets and uncertainty points per file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::timing::{TimingReport, TimingSummary};
use super::{run_pipeline, Backends, PipelineConfig, PipelineError};
use crate::backend::BackendError;
use crate::metrics::{
    evaluate_words, mean_point, score_sweep, sweep_thresholds, uncertainty_report, EvalReport,
    MetricsError, UncertaintyPoint,
};
use crate::text::{split_words, Normalization};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("no reference transcript for {audio} (looked for {expected})")]
    MissingReference { audio: PathBuf, expected: PathBuf },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed evaluation manifest: {0}")]
    Manifest(String),
    #[error("{audio}: {source}")]
    Pipeline {
        audio: PathBuf,
        source: PipelineError,
    },
    #[error("{audio}: cannot build backends: {source}")]
    Backend {
        audio: PathBuf,
        source: BackendError,
    },
    #[error("{audio}: {source}")]
    Metrics {
        audio: PathBuf,
        source: MetricsError,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalItem {
    pub audio: PathBuf,
    pub reference: String,
}

/// Pairs each audio file with `<refs_dir>/<stem>.txt`.
pub fn pair_references(audio: &[PathBuf], refs_dir: &Path) -> Result<Vec<EvalItem>, EvalError> {
    audio
        .iter()
        .map(|a| {
            let stem = a.file_stem().unwrap_or_default();
            let expected = refs_dir.join(stem).with_extension("txt");
            if !expected.is_file() {
                return Err(EvalError::MissingReference {
                    audio: a.clone(),
                    expected,
                });
            }
            let reference = std::fs::read_to_string(&expected).map_err(|source| EvalError::Io {
                path: expected.clone(),
                source,
            })?;
            Ok(EvalItem {
                audio: a.clone(),
                reference,
            })
        })
        .collect()
}

/// On-disk evaluation manifest; relative paths resolve against the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalManifest {
    pub audio: Vec<PathBuf>,
    pub references: PathBuf,
    #[serde(default)]
    pub config: Option<PathBuf>,
}

impl EvalManifest {
    pub fn load(path: &Path) -> Result<Self, EvalError> {
        let text = std::fs::read_to_string(path).map_err(|source| EvalError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut m: EvalManifest =
            serde_json::from_str(&text).map_err(|e| EvalError::Manifest(e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        m.audio = m.audio.iter().map(|p| base.join(p)).collect();
        m.references = base.join(&m.references);
        m.config = m.config.map(|p| base.join(p));
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileEvaluation {
    pub audio: PathBuf,
    pub report: EvalReport,
    /// Point of the configured mask, when uncertainty is on.
    pub uncertainty: Option<UncertaintyPoint>,
    /// Score-threshold sweep over every distinct word score.
    pub sweep: Vec<UncertaintyPoint>,
    pub timing: TimingReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationSummary {
    pub files: Vec<FileEvaluation>,
    pub mean_wer: f64,
    pub mean_uncertainty: Option<UncertaintyPoint>,
    pub timing: TimingSummary,
}

/// Runs the pipeline on every item. `backends_for` builds the backend set
/// for one audio file (scripted mocks are typically per file).
pub fn evaluate(
    items: &[EvalItem],
    config: &PipelineConfig,
    backends_for: &dyn Fn(&Path) -> Result<Backends, BackendError>,
) -> Result<EvaluationSummary, EvalError> {
    let mut files = Vec::with_capacity(items.len());
    for item in items {
        let audio = item.audio.clone();
        let backends = backends_for(&audio).map_err(|source| EvalError::Backend {
            audio: audio.clone(),
            source,
        })?;
        let result = run_pipeline(&audio, config, &backends).map_err(|source| {
            EvalError::Pipeline {
                audio: audio.clone(),
                source,
            }
        })?;
        let metrics_err = |source| EvalError::Metrics {
            audio: audio.clone(),
            source,
        };
        let reference = split_words(&item.reference);
        let hyp = result.transcription.word_texts();
        let report = evaluate_words(&reference, &hyp, Normalization::FULL).map_err(metrics_err)?;
        let targets = report.error_targets();
        let uncertainty = result
            .mask
            .as_ref()
            .map(|m| uncertainty_report(m, &targets))
            .transpose()
            .map_err(metrics_err)?;
        let sweep = score_sweep(
            &result.transcription,
            &targets,
            &sweep_thresholds(&result.transcription),
        )
        .map_err(metrics_err)?;
        files.push(FileEvaluation {
            audio,
            report,
            uncertainty,
            sweep,
            timing: result.timing,
        });
    }
    let n = files.len().max(1) as f64;
    let points: Vec<UncertaintyPoint> = files.iter().filter_map(|f| f.uncertainty).collect();
    let timings: Vec<TimingReport> = files.iter().map(|f| f.timing.clone()).collect();
    Ok(EvaluationSummary {
        mean_wer: files.iter().map(|f| f.report.wer).sum::<f64>() / n,
        mean_uncertainty: mean_point(&points),
        timing: TimingSummary::from_reports(&timings),
        files,
    })
}
