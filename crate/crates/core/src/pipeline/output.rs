//! Transcript rendering (text, JSON, HTML) and the run manifest.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{OutputConfig, PipelineConfig};
use super::timing::TimingReport;
use super::Diagnostics;
use crate::recognition::Transcription;
use crate::uncertainty::{MaskMethod, UncertaintyMask};

#[derive(Debug, thiserror::Error)]
pub enum OutputError {
    #[error("mask has {mask} flags but the transcript has {words} words")]
    MaskLength { mask: usize, words: usize },
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed transcript JSON: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Text,
    Json,
    Html,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Text => "txt",
            OutputFormat::Json => "json",
            OutputFormat::Html => "html",
        }
    }
}

impl std::str::FromStr for OutputFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "text" | "txt" => Ok(Self::Text),
            "json" => Ok(Self::Json),
            "html" => Ok(Self::Html),
            _ => Err(format!("format must be text|json|html, got {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordRecord {
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end_s: Option<f64>,
    pub score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uncertain: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintySummary {
    pub method: MaskMethod,
    pub uncertain_words: usize,
}

/// The JSON transcript document. Field order here is the key order on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptDocument {
    pub words: Vec<WordRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uncertainty: Option<UncertaintySummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<OutputConfig>,
    /// Wall-clock times make the file differ between runs, so they are opt-in.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<TimingReport>,
}

impl TranscriptDocument {
    pub fn new(
        transcription: &Transcription,
        mask: Option<&UncertaintyMask>,
    ) -> Result<Self, OutputError> {
        check_mask(transcription, mask)?;
        let words = transcription
            .words
            .iter()
            .enumerate()
            .map(|(i, w)| WordRecord {
                text: w.text.clone(),
                start_s: w.start_s,
                end_s: w.end_s,
                score: w.score,
                uncertain: mask.map(|m| m.flags[i]),
            })
            .collect();
        Ok(Self {
            words,
            uncertainty: mask.map(|m| UncertaintySummary {
                method: m.method,
                uncertain_words: m.uncertain_count(),
            }),
            config: None,
            timing: None,
        })
    }

    pub fn flags(&self) -> Option<Vec<bool>> {
        self.uncertainty.as_ref()?;
        Some(self.words.iter().map(|w| w.uncertain.unwrap_or(false)).collect())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("document serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, OutputError> {
        Ok(serde_json::from_str(text)?)
    }
}

fn check_mask(t: &Transcription, mask: Option<&UncertaintyMask>) -> Result<(), OutputError> {
    match mask {
        Some(m) if m.len() != t.len() => Err(OutputError::MaskLength {
            mask: m.len(),
            words: t.len(),
        }),
        _ => Ok(()),
    }
}

pub fn render_text(transcription: &Transcription) -> String {
    let mut s = transcription.text();
    s.push('\n');
    s
}

fn escape_html(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

/// Standalone page; uncertain words are wrapped in `<mark class="uncertain">`.
pub fn render_html(
    transcription: &Transcription,
    mask: Option<&UncertaintyMask>,
) -> Result<String, OutputError> {
    check_mask(transcription, mask)?;
    let body: Vec<String> = transcription
        .words
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let text = escape_html(&w.text);
            if mask.is_some_and(|m| m.flags[i]) {
                format!("<mark class=\"uncertain\">{text}</mark>")
            } else {
                text
            }
        })
        .collect();
    Ok(format!(
        "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>Transcript</title>\n\
         <style>mark.uncertain {{ background: #ffe082; }}</style>\n</head>\n<body>\n<p>{}</p>\n</body>\n</html>\n",
        body.join(" ")
    ))
}

/// Renders in `format`; `config` is echoed into JSON output only.
pub fn render(
    transcription: &Transcription,
    mask: Option<&UncertaintyMask>,
    format: OutputFormat,
    config: Option<&OutputConfig>,
) -> Result<String, OutputError> {
    match format {
        OutputFormat::Text => {
            check_mask(transcription, mask)?;
            Ok(render_text(transcription))
        }
        OutputFormat::Json => {
            let mut doc = TranscriptDocument::new(transcription, mask)?;
            doc.config = config.cloned();
            Ok(doc.to_json())
        }
        OutputFormat::Html => render_html(transcription, mask),
    }
}

pub fn emit_outputs(
    transcription: &Transcription,
    mask: Option<&UncertaintyMask>,
    format: OutputFormat,
    config: Option<&OutputConfig>,
    path: impl AsRef<Path>,
) -> Result<(), OutputError> {
    let rendered = render(transcription, mask, format, config)?;
    std::fs::write(path, rendered)?;
    Ok(())
}

/// Machine-readable record of one CLI run.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub config: &'a PipelineConfig,
    pub timing: Vec<TimingReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<Diagnostics>,
}

impl<'a> RunManifest<'a> {
    pub fn new(command: impl Into<String>, config: &'a PipelineConfig) -> Self {
        Self {
            tool: "longform",
            version: env!("CARGO_PKG_VERSION"),
            command: command.into(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            config,
            timing: Vec::new(),
            diagnostics: Vec::new(),
        }
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), OutputError> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        std::fs::write(path, s)?;
        Ok(())
    }
}

/// `talk.json` → `talk.manifest.json`.
pub fn manifest_path_for(output: &Path) -> PathBuf {
    let stem = output
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into());
    output.with_file_name(format!("{stem}.manifest.json"))
}
