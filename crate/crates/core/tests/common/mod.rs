//! Independent oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use std::path::Path;

use longform_core::recognition::{RecognizerScript, ScriptSegment, ScriptToken};
use rand::Rng;

/// Textbook Levenshtein distance with full matrix, no backtracking.
pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=b.len() {
        d[0][j] = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    d[a.len()][b.len()]
}

/// Two-state (silence/speech) machine run frame by frame; returns frame index spans.
pub fn hysteresis_frames(probs: &[f64], onset: f64, offset: f64) -> Vec<(usize, usize)> {
    let mut speech = vec![false; probs.len()];
    let mut state = false;
    for (i, &p) in probs.iter().enumerate() {
        state = if state { p >= offset } else { p >= onset };
        speech[i] = state;
    }
    let mut spans = Vec::new();
    let mut i = 0;
    while i < speech.len() {
        if speech[i] {
            let start = i;
            while i < speech.len() && speech[i] {
                i += 1;
            }
            spans.push((start, i));
        } else {
            i += 1;
        }
    }
    spans
}

/// Gap filling to a fixpoint, then short-segment removal.
pub fn smooth_oracle(segs: &[(f64, f64)], min_on: f64, min_off: f64) -> Vec<(f64, f64)> {
    let mut v = segs.to_vec();
    loop {
        let pos = v.windows(2).position(|w| w[1].0 - w[0].1 < min_off);
        match pos {
            Some(k) => {
                let merged = (v[k].0, v[k].1.max(v[k + 1].1));
                v.splice(k..k + 2, [merged]);
            }
            None => break,
        }
    }
    v.into_iter().filter(|s| s.1 - s.0 >= min_on).collect()
}

/// Writes mono 16-bit PCM.
pub fn write_wav(path: &Path, samples: &[f32], rate: u32) {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut w = hound::WavWriter::create(path, spec).unwrap();
    for &s in samples {
        w.write_sample((s * 32768.0).round().clamp(-32768.0, 32767.0) as i16).unwrap();
    }
    w.finalize().unwrap();
}

/// A voiced stretch of a synthetic recording and the words "spoken" in it.
#[derive(Debug, Clone)]
pub struct Utterance {
    pub start_s: f64,
    pub end_s: f64,
    pub words: Vec<(f64, f64, String, f64)>,
}

pub const VOCAB: [&str; 16] = [
    "the", "model", "speech", "long", "audio", "chunk", "word", "error", "score", "lecture",
    "signal", "noise", "time", "phrase", "voice", "text",
];

/// Tone bursts separated by silences, with one word per ~0.4 s of tone.
/// Some bursts run past 30 s so the cutter has work to do.
pub fn synth_recording(
    rng: &mut impl Rng,
    duration_s: f64,
    rate: u32,
) -> (Vec<f32>, Vec<Utterance>) {
    let n = (duration_s * rate as f64) as usize;
    let mut samples = vec![0f32; n];
    let mut utts = Vec::new();
    let mut t = 0.5;
    while t < duration_s - 1.0 {
        let len = if rng.gen_bool(0.1) {
            rng.gen_range(31.0..45.0)
        } else {
            rng.gen_range(1.0..6.0)
        };
        let end = (t + len).min(duration_s - 0.5);
        let freq = rng.gen_range(150.0..400.0);
        let a = (t * rate as f64) as usize;
        let b = (end * rate as f64) as usize;
        for (i, s) in samples[a..b].iter_mut().enumerate() {
            let x = (a + i) as f64 / rate as f64;
            *s = (0.3 * (2.0 * std::f64::consts::PI * freq * x).sin()) as f32;
        }
        let mut words = Vec::new();
        let mut w = t;
        while w + 0.4 <= end {
            let text = VOCAB[rng.gen_range(0..VOCAB.len())].to_string();
            words.push((w, w + 0.4, text, -rng.gen_range(0.01..3.0)));
            w += 0.4;
        }
        utts.push(Utterance {
            start_s: t,
            end_s: end,
            words,
        });
        t = end + rng.gen_range(0.4..2.5);
    }
    (samples, utts)
}

pub fn script_from_words(words: &[(f64, f64, String, f64)]) -> RecognizerScript {
    RecognizerScript {
        segments: words
            .iter()
            .map(|(a, b, w, lp)| ScriptSegment {
                start_s: *a,
                end_s: *b,
                tokens: vec![ScriptToken {
                    text: Some(format!(" {w}")),
                    bytes: None,
                    logprob: *lp,
                    special: false,
                }],
            })
            .collect(),
    }
}

pub fn write_script(path: &Path, script: &RecognizerScript) {
    std::fs::write(path, serde_json::to_string(script).unwrap()).unwrap();
}

/// Random words over the 3-symbol alphabet, length `len`, from index `code` in base 3.
pub fn ternary_words(mut code: usize, len: usize) -> Vec<String> {
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        out.push(["a", "b", "c"][code % 3].to_string());
        code /= 3;
    }
    out
}

pub fn random_words(rng: &mut impl Rng, max_len: usize, alphabet: &[&str]) -> Vec<String> {
    let n = rng.gen_range(0..=max_len);
    (0..n)
        .map(|_| alphabet[rng.gen_range(0..alphabet.len())].to_string())
        .collect()
}
