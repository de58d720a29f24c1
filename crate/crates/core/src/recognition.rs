//! Per-chunk recognition: byte-level tokens → words with scores.

use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::audio::AudioBuffer;
use crate::backend::{BackendError, Concurrency};
use crate::segmentation::Chunk;

#[derive(Debug, thiserror::Error)]
pub enum RecognitionError {
    #[error("token bytes do not form valid UTF-8: {0}")]
    InvalidUtf8(#[from] std::str::Utf8Error),
    #[error("cannot reduce an empty list of log-probabilities")]
    EmptyScores,
    #[error("log-probability {0} is not a finite value <= 0")]
    InvalidLogprob(f64),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

/// One recognizer output token: raw UTF-8 bytes (possibly a partial code point).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenPiece {
    pub bytes: Vec<u8>,
    pub logprob: f64,
    /// Language, task or timestamp markers excluded from word grouping.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub special: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end_s: Option<f64>,
}

impl TokenPiece {
    pub fn new(bytes: impl Into<Vec<u8>>, logprob: f64) -> Self {
        Self {
            bytes: bytes.into(),
            logprob,
            special: false,
            start_s: None,
            end_s: None,
        }
    }

    pub fn text(text: &str, logprob: f64) -> Self {
        Self::new(text.as_bytes(), logprob)
    }

    pub fn special(text: &str) -> Self {
        Self {
            special: true,
            ..Self::new(text.as_bytes(), 0.0)
        }
    }

    pub fn with_times(mut self, start_s: f64, end_s: f64) -> Self {
        self.start_s = Some(start_s);
        self.end_s = Some(end_s);
        self
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        if self.bytes.is_empty() {
            return Err(BackendError::Protocol("token with empty bytes".into()));
        }
        if !self.logprob.is_finite() || self.logprob > 0.0 {
            return Err(BackendError::Protocol(format!(
                "token logprob {} is not finite and <= 0",
                self.logprob
            )));
        }
        match (self.start_s, self.end_s) {
            (Some(a), Some(b)) if !(a.is_finite() && b.is_finite() && b >= a) => Err(
                BackendError::Protocol(format!("token time span ({a}, {b}) is invalid")),
            ),
            _ => Ok(()),
        }
    }
}

/// How token log-probabilities fold into a word score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reduction {
    #[default]
    Min,
    Sum,
    Mean,
}

impl std::str::FromStr for Reduction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "min" => Ok(Self::Min),
            "sum" => Ok(Self::Sum),
            "mean" => Ok(Self::Mean),
            other => Err(format!("unknown reduction {other:?} (expected min|sum|mean)")),
        }
    }
}

pub fn word_score(logprobs: &[f64], reduction: Reduction) -> Result<f64, RecognitionError> {
    if logprobs.is_empty() {
        return Err(RecognitionError::EmptyScores);
    }
    if let Some(&bad) = logprobs.iter().find(|v| !v.is_finite() || **v > 0.0) {
        return Err(RecognitionError::InvalidLogprob(bad));
    }
    let sum = || logprobs.iter().sum::<f64>();
    Ok(match reduction {
        Reduction::Min => logprobs.iter().copied().fold(f64::INFINITY, f64::min),
        Reduction::Sum => sum(),
        Reduction::Mean => sum() / logprobs.len() as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Word {
    pub text: String,
    pub start_s: Option<f64>,
    pub end_s: Option<f64>,
    /// Contiguous range into the owning transcription's token list.
    pub token_indices: Range<usize>,
    pub score: f64,
}

/// Splits the decoded token stream on whitespace and maps every word back
/// to the smallest contiguous token range holding its bytes.
///
/// A code point whose bytes straddle two tokens pulls both into the word.
/// Tokens marked `special` are skipped. Scores use [`Reduction::Min`].
pub fn group_tokens_into_words(tokens: &[TokenPiece]) -> Result<Vec<Word>, RecognitionError> {
    group_tokens_with(tokens, Reduction::Min)
}

pub fn group_tokens_with(
    tokens: &[TokenPiece],
    reduction: Reduction,
) -> Result<Vec<Word>, RecognitionError> {
    let mut bytes = Vec::new();
    // owner[i] = index (into `tokens`) of the token that contributed byte i
    let mut owner = Vec::new();
    for (idx, tok) in tokens.iter().enumerate().filter(|(_, t)| !t.special) {
        bytes.extend_from_slice(&tok.bytes);
        owner.extend(std::iter::repeat_n(idx, tok.bytes.len()));
    }
    let text = std::str::from_utf8(&bytes)?;

    let mut words = Vec::new();
    let mut word_start: Option<usize> = None;
    for (pos, ch) in text.char_indices().chain(std::iter::once((text.len(), ' '))) {
        match (word_start, ch.is_whitespace()) {
            (None, false) => word_start = Some(pos),
            (Some(start), true) => {
                let range = owner[start]..owner[pos - 1] + 1;
                words.push(build_word(&text[start..pos], range, tokens, reduction)?);
                word_start = None;
            }
            _ => {}
        }
    }
    Ok(words)
}

fn build_word(
    text: &str,
    range: Range<usize>,
    tokens: &[TokenPiece],
    reduction: Reduction,
) -> Result<Word, RecognitionError> {
    let pieces: Vec<&TokenPiece> = tokens[range.clone()].iter().filter(|t| !t.special).collect();
    let logprobs: Vec<f64> = pieces.iter().map(|t| t.logprob).collect();
    let score = word_score(&logprobs, reduction)?;
    let starts: Option<Vec<f64>> = pieces.iter().map(|t| t.start_s).collect();
    let ends: Option<Vec<f64>> = pieces.iter().map(|t| t.end_s).collect();
    Ok(Word {
        text: text.to_string(),
        start_s: starts.map(|v| v.into_iter().fold(f64::INFINITY, f64::min)),
        end_s: ends.map(|v| v.into_iter().fold(f64::NEG_INFINITY, f64::max)),
        token_indices: range,
        score,
    })
}

/// Recognized words of one chunk, or of a whole recording after [`Transcription::concat`].
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Transcription {
    pub words: Vec<Word>,
    pub tokens: Vec<TokenPiece>,
    pub chunk_id: Option<usize>,
}

impl Transcription {
    pub fn from_tokens(
        tokens: Vec<TokenPiece>,
        reduction: Reduction,
        chunk_id: Option<usize>,
    ) -> Result<Self, RecognitionError> {
        let words = group_tokens_with(&tokens, reduction)?;
        Ok(Self {
            words,
            tokens,
            chunk_id,
        })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn word_texts(&self) -> Vec<&str> {
        self.words.iter().map(|w| w.text.as_str()).collect()
    }

    pub fn text(&self) -> String {
        self.word_texts().join(" ")
    }

    pub fn scores(&self) -> Vec<f64> {
        self.words.iter().map(|w| w.score).collect()
    }

    /// Joins chunk transcriptions in order, re-basing token indices.
    pub fn concat(parts: impl IntoIterator<Item = Transcription>) -> Transcription {
        let mut out = Transcription::default();
        for part in parts {
            let offset = out.tokens.len();
            out.words.extend(part.words.into_iter().map(|mut w| {
                w.token_indices = w.token_indices.start + offset..w.token_indices.end + offset;
                w
            }));
            out.tokens.extend(part.tokens);
        }
        out
    }
}

/// What a recognizer backend is asked to transcribe.
#[derive(Debug, Clone, Copy)]
pub struct RecognizeRequest<'a> {
    /// Audio of the chunk only.
    pub audio: &'a AudioBuffer,
    /// Chunk boundaries on the timeline of the audio that was sliced.
    pub chunk: &'a Chunk,
    /// Timeline scale relative to the original recording (`up/down` for stretched audio).
    pub time_scale: f64,
}

/// Speech recognizer backend. Token times, when given, are chunk-relative.
pub trait Recognizer: Send + Sync {
    fn recognize(&self, request: &RecognizeRequest<'_>) -> Result<Vec<TokenPiece>, BackendError>;

    fn concurrency(&self) -> Concurrency {
        Concurrency::Parallel
    }
}

/// Transcribes one chunk of `buffer`, validating the backend output and
/// shifting token times to the recording timeline.
pub fn recognize(
    buffer: &AudioBuffer,
    chunk: &Chunk,
    backend: &dyn Recognizer,
    reduction: Reduction,
) -> Result<Transcription, RecognitionError> {
    recognize_scaled(buffer, chunk, backend, reduction, 1.0, None)
}

pub fn recognize_scaled(
    buffer: &AudioBuffer,
    chunk: &Chunk,
    backend: &dyn Recognizer,
    reduction: Reduction,
    time_scale: f64,
    chunk_id: Option<usize>,
) -> Result<Transcription, RecognitionError> {
    let audio = buffer.slice_seconds(chunk.start_s, chunk.end_s);
    let request = RecognizeRequest {
        audio: &audio,
        chunk,
        time_scale,
    };
    let mut tokens = backend.recognize(&request)?;
    for tok in &mut tokens {
        tok.validate()?;
        tok.start_s = tok.start_s.map(|t| t + chunk.start_s);
        tok.end_s = tok.end_s.map(|t| t + chunk.start_s);
    }
    Transcription::from_tokens(tokens, reduction, chunk_id).map_err(|e| match e {
        RecognitionError::InvalidUtf8(u) => {
            RecognitionError::Backend(BackendError::Protocol(format!("token bytes: {u}")))
        }
        other => other,
    })
}

/// Serialized token in a recognizer script: either `text` or raw `bytes`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScriptToken {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bytes: Option<Vec<u8>>,
    pub logprob: f64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub special: bool,
}

impl ScriptToken {
    fn to_piece(&self) -> Result<TokenPiece, BackendError> {
        let bytes = match (&self.text, &self.bytes) {
            (Some(t), None) => t.as_bytes().to_vec(),
            (None, Some(b)) => b.clone(),
            _ => {
                return Err(BackendError::Protocol(
                    "script token needs exactly one of `text` or `bytes`".into(),
                ))
            }
        };
        Ok(TokenPiece {
            bytes,
            logprob: self.logprob,
            special: self.special,
            start_s: None,
            end_s: None,
        })
    }
}

/// A scripted span of the recording and the tokens "heard" there.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScriptSegment {
    pub start_s: f64,
    pub end_s: f64,
    pub tokens: Vec<ScriptToken>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RecognizerScript {
    pub segments: Vec<ScriptSegment>,
}

/// Deterministic recognizer replaying a JSON script.
///
/// A request returns, in script order, the tokens of every segment whose
/// midpoint (on the original timeline) falls in the requested chunk, so any
/// chunking that covers the scripted speech reproduces the whole script.
/// Tokens carry their segment's span as chunk-relative times.
#[derive(Debug, Clone)]
pub struct ScriptedRecognizer {
    segments: Vec<(f64, f64, Vec<TokenPiece>)>,
}

impl ScriptedRecognizer {
    pub fn new(script: &RecognizerScript) -> Result<Self, BackendError> {
        let segments = script
            .segments
            .iter()
            .map(|seg| {
                let tokens = seg
                    .tokens
                    .iter()
                    .map(ScriptToken::to_piece)
                    .collect::<Result<Vec<_>, _>>()?;
                Ok((seg.start_s, seg.end_s, tokens))
            })
            .collect::<Result<Vec<_>, BackendError>>()?;
        Ok(Self { segments })
    }

    pub fn from_json(json: &str) -> Result<Self, BackendError> {
        let script: RecognizerScript = serde_json::from_str(json)
            .map_err(|e| BackendError::Protocol(format!("recognizer script: {e}")))?;
        Self::new(&script)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, BackendError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// One segment per word, each word a single leading-space token.
    pub fn from_timed_words(words: &[(f64, f64, &str, f64)]) -> Self {
        let segments = words
            .iter()
            .map(|&(a, b, w, lp)| (a, b, vec![TokenPiece::text(&format!(" {w}"), lp)]))
            .collect();
        Self { segments }
    }
}

impl Recognizer for ScriptedRecognizer {
    fn recognize(&self, request: &RecognizeRequest<'_>) -> Result<Vec<TokenPiece>, BackendError> {
        let scale = if request.time_scale > 0.0 {
            request.time_scale
        } else {
            1.0
        };
        let (lo, hi) = (request.chunk.start_s / scale, request.chunk.end_s / scale);
        let mut out = Vec::new();
        for (a, b, tokens) in &self.segments {
            let mid = (a + b) / 2.0;
            if mid >= lo && mid < hi {
                let rel_start = a * scale - request.chunk.start_s;
                let rel_end = b * scale - request.chunk.start_s;
                out.extend(tokens.iter().cloned().map(|t| {
                    if t.special {
                        t
                    } else {
                        t.with_times(rel_start.max(0.0), rel_end.max(rel_start.max(0.0)))
                    }
                }));
            }
        }
        Ok(out)
    }
}

/// Returns the same tokens for every chunk.
#[derive(Debug, Clone)]
pub struct FixedRecognizer(pub Vec<TokenPiece>);

impl Recognizer for FixedRecognizer {
    fn recognize(&self, _request: &RecognizeRequest<'_>) -> Result<Vec<TokenPiece>, BackendError> {
        Ok(self.0.clone())
    }
}
