//! Protocol conformance checks for any adapter command.

use std::time::Duration;

use serde::Serialize;
use serde_json::Value;

use super::process::AdapterProcess;
use super::{
    frames_from_payload, score_from_payload, scores_from_payload, tokens_from_payload,
    AdapterOp, AdapterRequest, AdapterResponse,
};
use crate::audio::{AudioBuffer, PIPELINE_SAMPLE_RATE};
use crate::backend::BackendError;
use crate::segmentation::expected_frames;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ConformanceReport {
    pub checks: Vec<CheckResult>,
}

impl ConformanceReport {
    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.passed)
    }

    fn record(&mut self, name: &str, outcome: Result<String, String>) {
        let (passed, detail) = match outcome {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        self.checks.push(CheckResult {
            name: name.to_string(),
            passed,
            detail,
        });
    }
}

impl std::fmt::Display for ConformanceReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for c in &self.checks {
            let mark = if c.passed { "PASS" } else { "FAIL" };
            writeln!(f, "[{mark}] {}: {}", c.name, c.detail)?;
        }
        Ok(())
    }
}

/// Frame count tolerance, matching what the engine accepts.
const FRAME_SLACK: usize = 2;

fn sine_burst(duration_s: f64) -> AudioBuffer {
    let rate = PIPELINE_SAMPLE_RATE as f64;
    let n = (duration_s * rate).round() as usize;
    let samples = (0..n)
        .map(|i| (0.5 * (2.0 * std::f64::consts::PI * 220.0 * i as f64 / rate).sin()) as f32)
        .collect();
    AudioBuffer::new(samples, PIPELINE_SAMPLE_RATE).expect("burst is in range")
}

fn request_for(op: AdapterOp, duration_s: f64) -> AdapterRequest {
    match op {
        AdapterOp::ScoreSequence => AdapterRequest::with_text(op, "the quick brown fox"),
        AdapterOp::Recognize => AdapterRequest::with_audio(op, &sine_burst(duration_s))
            .param("chunk_start_s", 0.0)
            .param("chunk_end_s", duration_s)
            .param("time_scale", 1.0),
        _ => AdapterRequest::with_audio(op, &sine_burst(duration_s)),
    }
}

fn check_payload(op: AdapterOp, payload: Value, duration_s: f64) -> Result<String, BackendError> {
    match op {
        AdapterOp::ClassifyFrames => {
            let s = frames_from_payload(payload)?;
            let expected = expected_frames(duration_s, s.frame_hop_s());
            if s.len().abs_diff(expected) > FRAME_SLACK {
                return Err(BackendError::Protocol(format!(
                    "{} frames for {duration_s} s at hop {} (expected {expected})",
                    s.len(),
                    s.frame_hop_s()
                )));
            }
            Ok(format!("{} frames, all in [0, 1]", s.len()))
        }
        AdapterOp::ClassifySegment => {
            let s = scores_from_payload(payload)?;
            Ok(format!("{} labels, all in [0, 1]", s.scores().len()))
        }
        AdapterOp::Recognize => {
            let tokens = tokens_from_payload(payload)?;
            let bytes: Vec<u8> = tokens
                .iter()
                .filter(|t| !t.special)
                .flat_map(|t| t.bytes.iter().copied())
                .collect();
            std::str::from_utf8(&bytes)
                .map_err(|e| BackendError::Protocol(format!("token bytes: {e}")))?;
            Ok(format!("{} tokens, valid UTF-8, logprobs <= 0", tokens.len()))
        }
        AdapterOp::ScoreSequence => {
            let s = score_from_payload(payload)?;
            Ok(format!("score {s}"))
        }
    }
}

fn response_of(line: &str) -> Result<AdapterResponse, String> {
    serde_json::from_str(line).map_err(|e| format!("response is not protocol JSON: {e}"))
}

/// Runs the adapter under `command` through the protocol checks for the
/// listed ops. Each check gets a fresh process.
pub fn run_conformance(command: &[String], ops: &[AdapterOp]) -> ConformanceReport {
    let mut report = ConformanceReport::default();
    let spawn = || AdapterProcess::spawn(command).map_err(|e| e.to_string());

    for &op in ops {
        let outcome = spawn().and_then(|mut p| {
            let resp = p.call(&request_for(op, 1.0)).map_err(|e| e.to_string())?;
            let payload = resp.into_payload().map_err(|e| e.to_string())?;
            check_payload(op, payload, 1.0).map_err(|e| e.to_string())
        });
        report.record(&format!("payload/{}", op.name()), outcome);
    }

    let outcome = spawn().and_then(|mut p| {
        p.send_line("{\"op\": \"classify_fr").map_err(|e| e.to_string())?;
        let bad = response_of(&p.read_line().map_err(|e| e.to_string())?)?;
        if bad.ok {
            return Err("truncated line was answered with ok=true".into());
        }
        p.send_line("{\"op\": \"no_such_op\", \"params\": {}}")
            .map_err(|e| e.to_string())?;
        let unknown = response_of(&p.read_line().map_err(|e| e.to_string())?)?;
        if unknown.ok {
            return Err("unknown op was answered with ok=true".into());
        }
        let op = ops.first().copied().unwrap_or(AdapterOp::ScoreSequence);
        let resp = p.call(&request_for(op, 1.0)).map_err(|e| e.to_string())?;
        if !resp.ok {
            return Err(format!("valid request after malformed ones failed: {:?}", resp.error));
        }
        Ok("malformed and unknown requests rejected; next request served".into())
    });
    report.record("malformed-line recovery", outcome);

    // pipelined requests whose answers differ by request, read back afterwards
    let probe = ops
        .iter()
        .copied()
        .find(|op| *op == AdapterOp::ClassifyFrames)
        .or_else(|| ops.first().copied());
    if let Some(op) = probe {
        let durations = [0.2, 0.6, 1.0, 0.4, 0.8];
        let outcome = spawn().and_then(|mut p| {
            for &d in &durations {
                let line = serde_json::to_string(&request_for(op, d)).map_err(|e| e.to_string())?;
                p.send_line(&line).map_err(|e| e.to_string())?;
            }
            let mut answered = Vec::new();
            for &d in &durations {
                let resp = response_of(&p.read_line().map_err(|e| e.to_string())?)?;
                let payload = resp.into_payload().map_err(|e| e.to_string())?;
                if op == AdapterOp::ClassifyFrames {
                    let s = frames_from_payload(payload).map_err(|e| e.to_string())?;
                    let expected = expected_frames(d, s.frame_hop_s());
                    if s.len().abs_diff(expected) > FRAME_SLACK {
                        return Err(format!(
                            "response {} has {} frames, request asked for {d} s",
                            answered.len(),
                            s.len()
                        ));
                    }
                    answered.push(s.len());
                } else {
                    check_payload(op, payload, d).map_err(|e| e.to_string())?;
                    answered.push(0);
                }
            }
            Ok(format!("{} pipelined responses in request order", answered.len()))
        });
        report.record("order preservation", outcome);
    }

    let outcome = spawn().and_then(|p| match p.shutdown(Duration::from_secs(5)) {
        Some(true) => Ok("exited cleanly on EOF".into()),
        Some(false) => Err("exited with failure status on EOF".into()),
        None => Err("did not exit within 5 s of EOF".into()),
    });
    report.record("EOF shutdown", outcome);
    report
}
