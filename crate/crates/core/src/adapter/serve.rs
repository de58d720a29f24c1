use std::io::{BufRead, Write};

use serde_json::{json, Value};

use super::{AdapterOp, AdapterRequest, AdapterResponse};
use crate::alignment::{SequenceScorer, UnigramScorer};
use crate::filtering::{EnergySegmentClassifier, SegmentClassifier};
use crate::recognition::{FixedRecognizer, RecognizeRequest, Recognizer, TokenPiece};
use crate::segmentation::{Chunk, EnergyFrameClassifier, FrameClassifier};

/// Model side of the adapter protocol.
pub trait AdapterHandler {
    fn handle(&self, request: &AdapterRequest) -> Result<Value, String>;
}

/// Answers one response line per input line until EOF. Malformed lines get
/// an `ok: false` response and the loop continues. Returns the number of
/// requests served.
pub fn serve(
    input: impl BufRead,
    mut output: impl Write,
    handler: &dyn AdapterHandler,
) -> std::io::Result<usize> {
    let mut served = 0;
    for line in input.lines() {
        let line = line?;
        let response = match serde_json::from_str::<AdapterRequest>(&line) {
            Ok(req) => match handler.handle(&req) {
                Ok(payload) => AdapterResponse::success(payload),
                Err(e) => AdapterResponse::failure(e),
            },
            Err(e) => AdapterResponse::failure(format!("malformed request: {e}")),
        };
        serde_json::to_writer(&mut output, &response)?;
        output.write_all(b"\n")?;
        output.flush()?;
        served += 1;
    }
    Ok(served)
}

/// Model-free handler: energy-based classifiers, a scripted recognizer and
/// the bundled unigram scorer.
pub struct MockHandler {
    pub frames: EnergyFrameClassifier,
    pub segment: EnergySegmentClassifier,
    pub recognizer: Box<dyn Recognizer>,
    pub scorer: UnigramScorer,
}

impl MockHandler {
    pub fn new(recognizer: Box<dyn Recognizer>) -> Self {
        Self {
            frames: EnergyFrameClassifier::default(),
            segment: EnergySegmentClassifier::default(),
            recognizer,
            scorer: UnigramScorer::bundled(),
        }
    }

    /// Tokens returned for any chunk when no script is given; the second
    /// word's first code point is split across two tokens.
    pub fn fixed_tokens() -> Vec<TokenPiece> {
        vec![
            TokenPiece::text(" echo", -0.05),
            TokenPiece::new(b" \xd1".to_vec(), -0.4),
            TokenPiece::new(b"\x81\xd0\xb5\xd1\x82\xd0\xb8".to_vec(), -0.2),
        ]
    }
}

impl Default for MockHandler {
    fn default() -> Self {
        Self::new(Box::new(FixedRecognizer(Self::fixed_tokens())))
    }
}

fn param_f64(req: &AdapterRequest, key: &str) -> Option<f64> {
    req.params.get(key).and_then(Value::as_f64)
}

impl AdapterHandler for MockHandler {
    fn handle(&self, req: &AdapterRequest) -> Result<Value, String> {
        match req.op {
            AdapterOp::ClassifyFrames => {
                let audio = req.decode_audio()?;
                let s = self.frames.classify_frames(&audio).map_err(|e| e.to_string())?;
                Ok(json!({"frame_hop_s": s.frame_hop_s(), "probs": s.probs()}))
            }
            AdapterOp::ClassifySegment => {
                let audio = req.decode_audio()?;
                let s = self.segment.classify_segment(&audio).map_err(|e| e.to_string())?;
                Ok(json!({"scores": s.scores()}))
            }
            AdapterOp::Recognize => {
                let audio = req.decode_audio()?;
                let start = param_f64(req, "chunk_start_s").unwrap_or(0.0);
                let end = param_f64(req, "chunk_end_s").unwrap_or(start + audio.duration_seconds());
                let chunk = Chunk::new(start, end);
                let request = RecognizeRequest {
                    audio: &audio,
                    chunk: &chunk,
                    time_scale: param_f64(req, "time_scale").unwrap_or(1.0),
                };
                let tokens = self.recognizer.recognize(&request).map_err(|e| e.to_string())?;
                Ok(json!({"tokens": tokens}))
            }
            AdapterOp::ScoreSequence => {
                let text = req.text.as_deref().ok_or("score_sequence needs `text`")?;
                let words: Vec<String> = text.split_whitespace().map(String::from).collect();
                let score = self.scorer.score(&words).map_err(|e| e.to_string())?;
                Ok(json!({"score": score}))
            }
        }
    }
}
