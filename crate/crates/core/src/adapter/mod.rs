//! Line-delimited JSON protocol for out-of-process model backends.
//!
//! Each request and response is one JSON object on one line. Requests:
//!
//! ```text
//! {"op": "classify_frames" | "classify_segment" | "recognize" | "score_sequence",
//!  "audio": "<base64 PCM16 LE mono @ 16 kHz>",   // audio ops
//!  "text": "<space-joined words>",               // score_sequence
//!  "params": {...}}
//! ```
//!
//! Responses are `{"ok": true, "payload": {...}}` or
//! `{"ok": false, "error": "..."}`, one per request, in request order.
//! See `docs/adapter-protocol.md` for payload shapes.

mod conformance;
mod process;
mod serve;

pub use conformance::{run_conformance, CheckResult, ConformanceReport};
pub use process::{
    AdapterFrameClassifier, AdapterRecognizer, AdapterScorer, AdapterSegmentClassifier,
    SubprocessAdapter,
};
pub use serve::{serve, AdapterHandler, MockHandler};

use std::collections::BTreeMap;

use base64::Engine as _;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::audio::{AudioBuffer, PIPELINE_SAMPLE_RATE};
use crate::backend::BackendError;
use crate::filtering::SegmentLabelScores;
use crate::recognition::TokenPiece;
use crate::segmentation::FrameProbSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdapterOp {
    ClassifyFrames,
    ClassifySegment,
    Recognize,
    ScoreSequence,
}

impl AdapterOp {
    pub const ALL: [AdapterOp; 4] = [
        AdapterOp::ClassifyFrames,
        AdapterOp::ClassifySegment,
        AdapterOp::Recognize,
        AdapterOp::ScoreSequence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AdapterOp::ClassifyFrames => "classify_frames",
            AdapterOp::ClassifySegment => "classify_segment",
            AdapterOp::Recognize => "recognize",
            AdapterOp::ScoreSequence => "score_sequence",
        }
    }
}

impl std::str::FromStr for AdapterOp {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AdapterOp::ALL
            .into_iter()
            .find(|op| op.name() == s)
            .ok_or_else(|| format!("unknown adapter op {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdapterRequest {
    pub op: AdapterOp,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audio: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default)]
    pub params: Map<String, Value>,
}

impl AdapterRequest {
    /// Audio request; the buffer must already be at 16 kHz.
    pub fn with_audio(op: AdapterOp, audio: &AudioBuffer) -> Self {
        Self {
            op,
            audio: Some(encode_audio(audio)),
            text: None,
            params: Map::new(),
        }
    }

    pub fn with_text(op: AdapterOp, text: impl Into<String>) -> Self {
        Self {
            op,
            audio: None,
            text: Some(text.into()),
            params: Map::new(),
        }
    }

    pub fn param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    pub fn decode_audio(&self) -> Result<AudioBuffer, String> {
        let b64 = self.audio.as_deref().ok_or("request has no audio")?;
        decode_audio(b64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdapterResponse {
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl AdapterResponse {
    pub fn success(payload: Value) -> Self {
        Self {
            ok: true,
            payload: Some(payload),
            error: None,
        }
    }

    pub fn failure(error: impl Into<String>) -> Self {
        Self {
            ok: false,
            payload: None,
            error: Some(error.into()),
        }
    }

    pub fn into_payload(self) -> Result<Value, BackendError> {
        if self.ok {
            self.payload
                .ok_or_else(|| BackendError::Protocol("ok response without payload".into()))
        } else {
            Err(BackendError::Failed(
                self.error.unwrap_or_else(|| "adapter reported failure".into()),
            ))
        }
    }
}

pub fn encode_audio(audio: &AudioBuffer) -> String {
    base64::engine::general_purpose::STANDARD.encode(audio.to_pcm16_bytes())
}

pub fn decode_audio(b64: &str) -> Result<AudioBuffer, String> {
    let bytes = base64::engine::general_purpose::STANDARD
        .decode(b64)
        .map_err(|e| format!("audio is not valid base64: {e}"))?;
    AudioBuffer::from_pcm16_bytes(&bytes, PIPELINE_SAMPLE_RATE).map_err(|e| e.to_string())
}

/// `classify_frames` payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FramesPayload {
    pub frame_hop_s: f64,
    pub probs: Vec<f64>,
}

/// `classify_segment` payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentPayload {
    pub scores: BTreeMap<String, f64>,
}

/// `recognize` payload; token bytes are sent as an array of integers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecognizePayload {
    pub tokens: Vec<TokenPiece>,
}

/// `score_sequence` payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScorePayload {
    pub score: f64,
}

fn parse_payload<T: serde::de::DeserializeOwned>(op: AdapterOp, v: Value) -> Result<T, BackendError> {
    serde_json::from_value(v)
        .map_err(|e| BackendError::Protocol(format!("{} payload: {e}", op.name())))
}

pub(crate) fn frames_from_payload(v: Value) -> Result<FrameProbSeries, BackendError> {
    let p: FramesPayload = parse_payload(AdapterOp::ClassifyFrames, v)?;
    FrameProbSeries::new(p.probs, p.frame_hop_s).map_err(|e| BackendError::Protocol(e.to_string()))
}

pub(crate) fn scores_from_payload(v: Value) -> Result<SegmentLabelScores, BackendError> {
    let p: SegmentPayload = parse_payload(AdapterOp::ClassifySegment, v)?;
    SegmentLabelScores::new(p.scores)
}

pub(crate) fn tokens_from_payload(v: Value) -> Result<Vec<TokenPiece>, BackendError> {
    let p: RecognizePayload = parse_payload(AdapterOp::Recognize, v)?;
    for t in &p.tokens {
        t.validate()?;
    }
    Ok(p.tokens)
}

pub(crate) fn score_from_payload(v: Value) -> Result<f64, BackendError> {
    let p: ScorePayload = parse_payload(AdapterOp::ScoreSequence, v)?;
    if !p.score.is_finite() {
        return Err(BackendError::Protocol(format!("score {} is not finite", p.score)));
    }
    Ok(p.score)
}
