use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use serde_json::Value;

use super::{
    frames_from_payload, score_from_payload, scores_from_payload, tokens_from_payload,
    AdapterOp, AdapterRequest, AdapterResponse,
};
use crate::alignment::SequenceScorer;
use crate::audio::{AudioBuffer, PIPELINE_SAMPLE_RATE};
use crate::backend::BackendError;
use crate::filtering::{SegmentClassifier, SegmentLabelScores};
use crate::recognition::{RecognizeRequest, Recognizer, TokenPiece};
use crate::segmentation::{FrameClassifier, FrameProbSeries};

/// One running adapter process.
pub(crate) struct AdapterProcess {
    child: Child,
    stdin: Option<ChildStdin>,
    stdout: BufReader<ChildStdout>,
}

impl AdapterProcess {
    pub(crate) fn spawn(command: &[String]) -> Result<Self, BackendError> {
        let (program, args) = command
            .split_first()
            .ok_or_else(|| BackendError::Failed("empty adapter command".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| BackendError::Failed(format!("cannot start adapter {program:?}: {e}")))?;
        let stdin = child.stdin.take();
        let stdout = BufReader::new(child.stdout.take().expect("stdout is piped"));
        Ok(Self {
            child,
            stdin,
            stdout,
        })
    }

    pub(crate) fn send_line(&mut self, line: &str) -> Result<(), BackendError> {
        let stdin = self
            .stdin
            .as_mut()
            .ok_or_else(|| BackendError::Failed("adapter stdin already closed".into()))?;
        stdin.write_all(line.as_bytes())?;
        stdin.write_all(b"\n")?;
        stdin.flush()?;
        Ok(())
    }

    pub(crate) fn read_line(&mut self) -> Result<String, BackendError> {
        let mut line = String::new();
        let n = self.stdout.read_line(&mut line)?;
        if n == 0 {
            return Err(BackendError::Failed("adapter closed its output".into()));
        }
        Ok(line.trim_end_matches(['\n', '\r']).to_string())
    }

    pub(crate) fn call(&mut self, request: &AdapterRequest) -> Result<AdapterResponse, BackendError> {
        let line = serde_json::to_string(request)
            .map_err(|e| BackendError::Protocol(format!("cannot encode request: {e}")))?;
        self.send_line(&line)?;
        let reply = self.read_line()?;
        serde_json::from_str(&reply)
            .map_err(|e| BackendError::Protocol(format!("malformed response line: {e}")))
    }

    /// Closes stdin and waits up to `grace` for a clean exit; returns the
    /// exit success, or `None` if the process had to be killed.
    pub(crate) fn shutdown(mut self, grace: Duration) -> Option<bool> {
        self.stdin.take();
        let deadline = Instant::now() + grace;
        loop {
            match self.child.try_wait() {
                Ok(Some(status)) => return Some(status.success()),
                Ok(None) if Instant::now() < deadline => std::thread::sleep(Duration::from_millis(10)),
                _ => {
                    let _ = self.child.kill();
                    let _ = self.child.wait();
                    return None;
                }
            }
        }
    }
}

impl Drop for AdapterProcess {
    fn drop(&mut self) {
        self.stdin.take();
        if let Ok(None) = self.child.try_wait() {
            let _ = self.child.kill();
        }
        let _ = self.child.wait();
    }
}

/// Pool of serial adapter processes running the same command.
///
/// Every concurrent caller gets its own process; idle processes are reused.
/// A process that fails mid-call is discarded.
pub struct SubprocessAdapter {
    command: Vec<String>,
    idle: Mutex<Vec<AdapterProcess>>,
}

impl std::fmt::Debug for SubprocessAdapter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SubprocessAdapter")
            .field("command", &self.command)
            .finish_non_exhaustive()
    }
}

impl SubprocessAdapter {
    pub fn new(command: Vec<String>) -> Self {
        Self {
            command,
            idle: Mutex::new(Vec::new()),
        }
    }

    /// Splits a command line on whitespace (no shell quoting).
    pub fn from_command_line(line: &str) -> Self {
        Self::new(line.split_whitespace().map(String::from).collect())
    }

    pub fn command(&self) -> &[String] {
        &self.command
    }

    pub fn call(&self, request: &AdapterRequest) -> Result<Value, BackendError> {
        let pooled = self.idle.lock().unwrap_or_else(|e| e.into_inner()).pop();
        let mut process = match pooled {
            Some(p) => p,
            None => AdapterProcess::spawn(&self.command)?,
        };
        let response = process.call(request)?;
        self.idle
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .push(process);
        response.into_payload()
    }
}

fn wire_audio(audio: &AudioBuffer) -> Result<AudioBuffer, BackendError> {
    audio
        .to_rate(PIPELINE_SAMPLE_RATE)
        .map_err(|e| BackendError::Failed(e.to_string()))
}

#[derive(Debug, Clone)]
pub struct AdapterFrameClassifier(pub Arc<SubprocessAdapter>);

impl FrameClassifier for AdapterFrameClassifier {
    fn classify_frames(&self, audio: &AudioBuffer) -> Result<FrameProbSeries, BackendError> {
        let req = AdapterRequest::with_audio(AdapterOp::ClassifyFrames, &wire_audio(audio)?);
        frames_from_payload(self.0.call(&req)?)
    }
}

#[derive(Debug, Clone)]
pub struct AdapterSegmentClassifier(pub Arc<SubprocessAdapter>);

impl SegmentClassifier for AdapterSegmentClassifier {
    fn classify_segment(&self, audio: &AudioBuffer) -> Result<SegmentLabelScores, BackendError> {
        let req = AdapterRequest::with_audio(AdapterOp::ClassifySegment, &wire_audio(audio)?);
        scores_from_payload(self.0.call(&req)?)
    }
}

#[derive(Debug, Clone)]
pub struct AdapterRecognizer(pub Arc<SubprocessAdapter>);

impl Recognizer for AdapterRecognizer {
    fn recognize(&self, request: &RecognizeRequest<'_>) -> Result<Vec<TokenPiece>, BackendError> {
        let req = AdapterRequest::with_audio(AdapterOp::Recognize, &wire_audio(request.audio)?)
            .param("chunk_start_s", request.chunk.start_s)
            .param("chunk_end_s", request.chunk.end_s)
            .param("time_scale", request.time_scale);
        tokens_from_payload(self.0.call(&req)?)
    }
}

#[derive(Debug, Clone)]
pub struct AdapterScorer(pub Arc<SubprocessAdapter>);

impl SequenceScorer for AdapterScorer {
    fn score(&self, words: &[String]) -> Result<f64, BackendError> {
        let req = AdapterRequest::with_text(AdapterOp::ScoreSequence, words.join(" "));
        score_from_payload(self.0.call(&req)?)
    }
}
