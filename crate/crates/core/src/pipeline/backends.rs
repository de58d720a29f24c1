//! Building backend sets from endpoint strings.

use std::collections::HashMap;
use std::path::Path;
use std::sync::{Arc, Mutex};

use crate::adapter::{
    AdapterFrameClassifier, AdapterRecognizer, AdapterScorer, AdapterSegmentClassifier,
    SubprocessAdapter,
};
use crate::alignment::{SequenceScorer, UnigramScorer};
use crate::backend::BackendError;
use crate::filtering::{EnergySegmentClassifier, SegmentClassifier};
use crate::recognition::{Recognizer, ScriptedRecognizer};
use crate::segmentation::{EnergyFrameClassifier, FrameClassifier};

use super::config::BackendEndpoints;

/// Every model the pipeline may call. Optional members are only needed by
/// the stages that use them.
#[derive(Clone)]
pub struct Backends {
    pub frame_classifier: Arc<dyn FrameClassifier>,
    pub segment_classifier: Option<Arc<dyn SegmentClassifier>>,
    pub recognizer: Arc<dyn Recognizer>,
    pub additional_recognizer: Option<Arc<dyn Recognizer>>,
    /// Used for the stretched pass; falls back to `recognizer`.
    pub tta_recognizer: Option<Arc<dyn Recognizer>>,
    pub scorer: Option<Arc<dyn SequenceScorer>>,
}

impl Backends {
    /// Energy-based classifiers around the given recognizer.
    pub fn with_recognizer(recognizer: Arc<dyn Recognizer>) -> Self {
        Self {
            frame_classifier: Arc::new(EnergyFrameClassifier::default()),
            segment_classifier: Some(Arc::new(EnergySegmentClassifier::default())),
            recognizer,
            additional_recognizer: None,
            tta_recognizer: None,
            scorer: None,
        }
    }
}

/// Builds [`Backends`] from endpoint strings, sharing one adapter pool per
/// distinct command across builds.
///
/// `{stem}` in a `script:` path is replaced by the audio file stem, so a
/// corpus can carry one script per recording.
pub struct BackendFactory {
    endpoints: BackendEndpoints,
    adapters: Mutex<HashMap<String, Arc<SubprocessAdapter>>>,
}

fn unknown(role: &str, endpoint: &str) -> BackendError {
    BackendError::Failed(format!("unsupported {role} endpoint {endpoint:?}"))
}

impl BackendFactory {
    pub fn new(endpoints: BackendEndpoints) -> Self {
        Self {
            endpoints,
            adapters: Mutex::new(HashMap::new()),
        }
    }

    fn adapter(&self, command: &str) -> Arc<SubprocessAdapter> {
        let mut pool = self.adapters.lock().unwrap_or_else(|e| e.into_inner());
        pool.entry(command.trim().to_string())
            .or_insert_with(|| Arc::new(SubprocessAdapter::from_command_line(command)))
            .clone()
    }

    fn recognizer(
        &self,
        role: &str,
        endpoint: &str,
        audio: Option<&Path>,
    ) -> Result<Option<Arc<dyn Recognizer>>, BackendError> {
        if endpoint == "none" {
            return Ok(None);
        }
        if let Some(cmd) = endpoint.strip_prefix("cmd:") {
            return Ok(Some(Arc::new(AdapterRecognizer(self.adapter(cmd)))));
        }
        if let Some(path) = endpoint.strip_prefix("script:") {
            let stem = audio
                .and_then(Path::file_stem)
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            let path = path.replace("{stem}", &stem);
            return Ok(Some(Arc::new(ScriptedRecognizer::from_file(path)?)));
        }
        Err(unknown(role, endpoint))
    }

    pub fn build(&self, audio: Option<&Path>) -> Result<Backends, BackendError> {
        let e = &self.endpoints;
        let frame_classifier: Arc<dyn FrameClassifier> = match e.frame_classifier.as_str() {
            "energy" => Arc::new(EnergyFrameClassifier::default()),
            s => match s.strip_prefix("cmd:") {
                Some(cmd) => Arc::new(AdapterFrameClassifier(self.adapter(cmd))),
                None => return Err(unknown("frame_classifier", s)),
            },
        };
        let segment_classifier: Option<Arc<dyn SegmentClassifier>> =
            match e.segment_classifier.as_str() {
                "none" => None,
                "energy" => Some(Arc::new(EnergySegmentClassifier::default())),
                s => match s.strip_prefix("cmd:") {
                    Some(cmd) => Some(Arc::new(AdapterSegmentClassifier(self.adapter(cmd)))),
                    None => return Err(unknown("segment_classifier", s)),
                },
            };
        let recognizer = self
            .recognizer("recognizer", &e.recognizer, audio)?
            .ok_or_else(|| BackendError::Failed("no recognizer endpoint configured".into()))?;
        let scorer: Option<Arc<dyn SequenceScorer>> = match e.scorer.as_str() {
            "none" => None,
            "unigram" => Some(Arc::new(UnigramScorer::bundled())),
            s => {
                if let Some(path) = s.strip_prefix("unigram:") {
                    let text = std::fs::read_to_string(path)?;
                    Some(Arc::new(UnigramScorer::from_tsv(&text).map_err(BackendError::Failed)?))
                } else if let Some(cmd) = s.strip_prefix("cmd:") {
                    Some(Arc::new(AdapterScorer(self.adapter(cmd))))
                } else {
                    return Err(unknown("scorer", s));
                }
            }
        };
        Ok(Backends {
            frame_classifier,
            segment_classifier,
            recognizer,
            additional_recognizer: self.recognizer(
                "additional_recognizer",
                &e.additional_recognizer,
                audio,
            )?,
            tta_recognizer: self.recognizer("tta_recognizer", &e.tta_recognizer, audio)?,
            scorer,
        })
    }
}
