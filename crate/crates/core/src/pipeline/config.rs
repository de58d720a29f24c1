//! Pipeline configuration and its plain `key = value` file format.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::alignment::LookaheadParams;
use crate::filtering::{default_speech_labels, DEFAULT_THRESHOLD};
use crate::recognition::Reduction;
use crate::segmentation::SegmentationParams;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("cannot read config file: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Chunking {
    Smart,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UncertaintyMode {
    None,
    Scores,
    Disagreement,
    Tta,
    Ensemble,
}

/// Mask sources an ensemble may combine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskSource {
    Scores,
    Disagreement,
    Tta,
}

impl std::str::FromStr for Chunking {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "smart" => Ok(Self::Smart),
            "uniform" => Ok(Self::Uniform),
            _ => Err(format!("chunking must be smart|uniform, got {s:?}")),
        }
    }
}

impl std::str::FromStr for UncertaintyMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "none" => Ok(Self::None),
            "scores" => Ok(Self::Scores),
            "disagreement" => Ok(Self::Disagreement),
            "tta" => Ok(Self::Tta),
            "ensemble" => Ok(Self::Ensemble),
            _ => Err(format!(
                "uncertainty must be none|scores|disagreement|tta|ensemble, got {s:?}"
            )),
        }
    }
}

impl std::str::FromStr for MaskSource {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "scores" => Ok(Self::Scores),
            "disagreement" => Ok(Self::Disagreement),
            "tta" => Ok(Self::Tta),
            _ => Err(format!("ensemble member must be scores|disagreement|tta, got {s:?}")),
        }
    }
}

/// Where each backend comes from.
///
/// Endpoint strings: `energy` (model-free mock), `script:<path>` (scripted
/// recognizer), `cmd:<program args…>` (adapter subprocess), `unigram` or
/// `unigram:<tsv>` (scorer), `none`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendEndpoints {
    pub frame_classifier: String,
    pub segment_classifier: String,
    pub recognizer: String,
    pub additional_recognizer: String,
    /// Recognizer for the stretched pass; `none` reuses `recognizer`.
    pub tta_recognizer: String,
    pub scorer: String,
}

impl Default for BackendEndpoints {
    fn default() -> Self {
        Self {
            frame_classifier: "energy".into(),
            segment_classifier: "energy".into(),
            recognizer: "none".into(),
            additional_recognizer: "none".into(),
            tta_recognizer: "none".into(),
            scorer: "none".into(),
        }
    }
}

pub const ENDPOINT_ENV_VARS: [(&str, &str); 6] = [
    ("LONGFORM_FRAME_CLASSIFIER", "frame_classifier"),
    ("LONGFORM_SEGMENT_CLASSIFIER", "segment_classifier"),
    ("LONGFORM_RECOGNIZER", "recognizer"),
    ("LONGFORM_ADDITIONAL_RECOGNIZER", "additional_recognizer"),
    ("LONGFORM_TTA_RECOGNIZER", "tta_recognizer"),
    ("LONGFORM_SCORER", "scorer"),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub chunking: Chunking,
    pub ast_filter: bool,
    pub uncertainty: UncertaintyMode,
    pub ensemble: Vec<MaskSource>,
    pub score_threshold: f64,
    pub reduction: Reduction,
    pub stretch_up: u32,
    pub stretch_down: u32,
    pub worker_count: usize,
    pub segmentation: SegmentationParams,
    pub uniform_chunk_s: f64,
    pub speech_labels: BTreeSet<String>,
    pub filter_threshold: f64,
    pub lm_validation: bool,
    pub lookahead: LookaheadParams,
    pub flag_deletes: bool,
    pub tta_refine: bool,
    pub endpoints: BackendEndpoints,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            chunking: Chunking::Smart,
            ast_filter: true,
            uncertainty: UncertaintyMode::None,
            ensemble: vec![MaskSource::Scores, MaskSource::Disagreement],
            score_threshold: -1.0,
            reduction: Reduction::Min,
            stretch_up: 4,
            stretch_down: 3,
            worker_count: 4,
            segmentation: SegmentationParams::default(),
            uniform_chunk_s: 30.0,
            speech_labels: default_speech_labels(),
            filter_threshold: DEFAULT_THRESHOLD,
            lm_validation: false,
            lookahead: LookaheadParams::default(),
            flag_deletes: true,
            tta_refine: false,
            endpoints: BackendEndpoints::default(),
        }
    }
}

fn parse_bool(v: &str) -> Result<bool, String> {
    match v {
        "on" | "true" | "yes" | "1" => Ok(true),
        "off" | "false" | "no" | "0" => Ok(false),
        _ => Err(format!("expected on|off, got {v:?}")),
    }
}

fn parse_num<T: std::str::FromStr>(v: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    v.parse().map_err(|e| format!("{v:?}: {e}"))
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.worker_count < 1 {
            return bad("worker_count must be >= 1".into());
        }
        if self.stretch_up < 1 || self.stretch_down < 1 {
            return bad("stretch factors must be >= 1".into());
        }
        let s = &self.segmentation;
        if !(s.offset > 0.0 && s.offset <= s.onset && s.onset < 1.0) {
            return bad(format!("need 0 < offset <= onset < 1 (onset={}, offset={})", s.onset, s.offset));
        }
        if !(s.max_chunk_s > 0.0) || !(self.uniform_chunk_s > 0.0) {
            return bad("chunk lengths must be positive".into());
        }
        if s.min_on_s < 0.0 || s.min_off_s < 0.0 || s.merge_gap_s < 0.0 {
            return bad("durations must be non-negative".into());
        }
        if !(0.0..=1.0).contains(&self.filter_threshold) {
            return bad("filter_threshold must lie in [0, 1]".into());
        }
        if self.ast_filter && self.speech_labels.is_empty() {
            return bad("speech_labels must not be empty when the filter is on".into());
        }
        if self.score_threshold.is_nan() {
            return bad("score_threshold is NaN".into());
        }
        if self.uncertainty == UncertaintyMode::Ensemble && self.ensemble.is_empty() {
            return bad("ensemble needs at least one member".into());
        }
        Ok(())
    }

    /// Sets one key from the config file vocabulary.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let v = value.trim();
        match key {
            "chunking" => self.chunking = v.parse()?,
            "ast_filter" => self.ast_filter = parse_bool(v)?,
            "uncertainty" => self.uncertainty = v.parse()?,
            "ensemble" => {
                self.ensemble = v
                    .split(',')
                    .map(|m| m.trim().parse())
                    .collect::<Result<_, _>>()?
            }
            "score_threshold" => self.score_threshold = parse_num(v)?,
            "reduction" => self.reduction = v.parse()?,
            "stretch_up" => self.stretch_up = parse_num(v)?,
            "stretch_down" => self.stretch_down = parse_num(v)?,
            "workers" | "worker_count" => self.worker_count = parse_num(v)?,
            "onset" => self.segmentation.onset = parse_num(v)?,
            "offset" => self.segmentation.offset = parse_num(v)?,
            "min_on_s" => self.segmentation.min_on_s = parse_num(v)?,
            "min_off_s" => self.segmentation.min_off_s = parse_num(v)?,
            "max_chunk_s" => self.segmentation.max_chunk_s = parse_num(v)?,
            "merge_gap_s" => self.segmentation.merge_gap_s = parse_num(v)?,
            "uniform_chunk_s" => self.uniform_chunk_s = parse_num(v)?,
            // labels contain commas, so the list separator is ';'
            "speech_labels" => {
                self.speech_labels = v
                    .split(';')
                    .map(str::trim)
                    .filter(|l| !l.is_empty())
                    .map(String::from)
                    .collect()
            }
            "filter_threshold" => self.filter_threshold = parse_num(v)?,
            "lm_validation" => self.lm_validation = parse_bool(v)?,
            "lookahead" => self.lookahead.lookahead = parse_num(v)?,
            "lookahead_group_max" => self.lookahead.group_max = parse_num(v)?,
            "flag_deletes" => self.flag_deletes = parse_bool(v)?,
            "tta_refine" => self.tta_refine = parse_bool(v)?,
            "frame_classifier" => self.endpoints.frame_classifier = v.to_string(),
            "segment_classifier" => self.endpoints.segment_classifier = v.to_string(),
            "recognizer" => self.endpoints.recognizer = v.to_string(),
            "additional_recognizer" => self.endpoints.additional_recognizer = v.to_string(),
            "tta_recognizer" => self.endpoints.tta_recognizer = v.to_string(),
            "scorer" => self.endpoints.scorer = v.to_string(),
            other => return Err(format!("unknown key {other:?}")),
        }
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_str(&mut self, text: &str) -> Result<(), ConfigError> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split_once('#').map_or(raw, |(a, _)| a).trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Parse {
                line: n + 1,
                message: "expected key = value".into(),
            })?;
            self.set(k.trim(), v).map_err(|message| ConfigError::Parse {
                line: n + 1,
                message,
            })?;
        }
        Ok(())
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        cfg.apply_str(&std::fs::read_to_string(path)?)?;
        Ok(cfg)
    }

    /// Overrides backend endpoints from `LONGFORM_*` variables found by `lookup`.
    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) -> Result<(), ConfigError> {
        for (var, key) in ENDPOINT_ENV_VARS {
            if let Some(v) = lookup(var) {
                self.set(key, &v).map_err(ConfigError::Invalid)?;
            }
        }
        Ok(())
    }

    /// Settings that change the transcript; echoed into JSON output.
    pub fn output_summary(&self) -> OutputConfig {
        OutputConfig {
            chunking: self.chunking,
            ast_filter: self.ast_filter,
            uncertainty: self.uncertainty,
            score_threshold: matches!(
                self.uncertainty,
                UncertaintyMode::Scores | UncertaintyMode::Ensemble
            )
            .then_some(self.score_threshold),
            reduction: self.reduction,
            stretch: (self.uncertainty_uses(MaskSource::Tta))
                .then_some([self.stretch_up, self.stretch_down]),
        }
    }

    pub fn uncertainty_uses(&self, source: MaskSource) -> bool {
        match self.uncertainty {
            UncertaintyMode::None => false,
            UncertaintyMode::Scores => source == MaskSource::Scores,
            UncertaintyMode::Disagreement => source == MaskSource::Disagreement,
            UncertaintyMode::Tta => source == MaskSource::Tta,
            UncertaintyMode::Ensemble => self.ensemble.contains(&source),
        }
    }
}

/// Transcript-affecting subset of [`PipelineConfig`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputConfig {
    pub chunking: Chunking,
    pub ast_filter: bool,
    pub uncertainty: UncertaintyMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score_threshold: Option<f64>,
    pub reduction: Reduction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stretch: Option<[u32; 2]>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_key_values() {
        let mut c = PipelineConfig::default();
        c.apply_str(
            "# comment\nchunking = uniform\nast_filter = off\nuncertainty = ensemble\n\
             ensemble = scores, tta\nworkers = 8  # trailing\nspeech_labels = Speech; Male speech, man speaking\n",
        )
        .unwrap();
        assert_eq!(c.chunking, Chunking::Uniform);
        assert!(!c.ast_filter);
        assert_eq!(c.ensemble, vec![MaskSource::Scores, MaskSource::Tta]);
        assert_eq!(c.worker_count, 8);
        assert!(c.speech_labels.contains("Male speech, man speaking"));
        c.validate().unwrap();
    }

    #[test]
    fn reports_bad_lines() {
        let mut c = PipelineConfig::default();
        let err = c.apply_str("chunking = smart\nbogus\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line: 2, .. }));
        assert!(c.apply_str("workers = many").is_err());
        assert!(c.apply_str("nope = 1").is_err());
    }

    #[test]
    fn validation() {
        let mut c = PipelineConfig::default();
        c.worker_count = 0;
        assert!(c.validate().is_err());
        let mut c = PipelineConfig::default();
        c.stretch_down = 0;
        assert!(c.validate().is_err());
        let mut c = PipelineConfig::default();
        c.segmentation.offset = 0.9;
        assert!(c.validate().is_err());
    }

    #[test]
    fn env_overrides_endpoints() {
        let mut c = PipelineConfig::default();
        c.apply_env(|k| (k == "LONGFORM_RECOGNIZER").then(|| "cmd:python3 asr.py".to_string()))
            .unwrap();
        assert_eq!(c.endpoints.recognizer, "cmd:python3 asr.py");
        assert_eq!(c.endpoints.scorer, "none");
    }
}
