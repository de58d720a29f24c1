//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::{hysteresis_frames, levenshtein, smooth_oracle, synth_recording, write_wav};
use longform_core::alignment::{align, refine, DiffOp};
use longform_core::audio::{mix_noise_detailed, AudioBuffer};
use longform_core::metrics::{score_sweep, sweep_thresholds, uncertainty_report, wer, word_error_targets};
use longform_core::pipeline::output::{render, OutputFormat};
use longform_core::pipeline::{run_pipeline, Backends, MaskSource, PipelineConfig, UncertaintyMode};
use longform_core::recognition::{group_tokens_into_words, ScriptedRecognizer, Transcription};
use longform_core::segmentation::{binarize, cut_and_merge, smooth, FrameProbSeries, SpeechSegment};
use longform_core::uncertainty::{ensemble_masks, mask_from_scores, MaskMethod, UncertaintyMask};
use longform_core::{EditScript, OpKind, TokenPiece};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("alignment matches quadratic DP", alignment_oracle),
        ("refine examples and source preservation", refine_preserves),
        ("token-to-word grouping is lossless", token_grouping),
        ("segmentation matches oracles", segmentation),
        ("WER matches DP oracle", wer_oracle),
        ("uncertainty metrics", uncertainty_metrics),
        ("end-to-end determinism", end_to_end_determinism),
        ("noise mixing hits requested SNR", noise_snr),
        ("low-score threshold beats random recall", score_threshold_recall),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|p| Err(format!("panicked: {}", panic_text(&p))));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {name} ({secs:.1} s): {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name} ({secs:.1} s): {why}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

fn panic_text(p: &Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<String>()
        .cloned()
        .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
        .unwrap_or_default()
}

// ---------------------------------------------------------------- alignment

const SYMBOLS: [&str; 3] = ["a", "b", "c"];

/// Walks every `b` of length ≤ `max` depth-first, extending the DP row for `a`
/// one symbol at a time, and checks `align` at each node. `rows[d]` holds the
/// row for the current prefix of length `d`.
fn walk(a: &[&str], b: &mut Vec<&'static str>, rows: &mut [Vec<usize>], max: usize, pairs: &mut u64) -> Outcome {
    let depth = b.len();
    let want = rows[depth][a.len()];
    let got = align(a, b);
    *pairs += 1;
    ensure!(
        got.edit_cost() == want && got.base_len() == a.len() && got.other_len() == b.len(),
        "{a:?} vs {b:?}: cost {} want {want}",
        got.edit_cost()
    );
    if depth == max {
        return Ok(String::new());
    }
    for s in SYMBOLS {
        let (done, rest) = rows.split_at_mut(depth + 1);
        let (row, next) = (&done[depth], &mut rest[0]);
        next[0] = row[0] + 1;
        for i in 1..row.len() {
            let sub = row[i - 1] + usize::from(a[i - 1] != s);
            next[i] = sub.min(row[i] + 1).min(next[i - 1] + 1);
        }
        b.push(s);
        walk(a, b, rows, max, pairs)?;
        b.pop();
    }
    Ok(String::new())
}

fn all_sequences(max: usize) -> Vec<Vec<&'static str>> {
    let mut seqs = vec![vec![]];
    let mut i = 0;
    while i < seqs.len() {
        if seqs[i].len() < max {
            for s in SYMBOLS {
                let mut v = seqs[i].clone();
                v.push(s);
                seqs.push(v);
            }
        }
        i += 1;
    }
    seqs
}

/// Lowercase and strip ASCII punctuation, written out independently of the crate.
fn fold(w: &str) -> String {
    w.chars().filter(|c| !c.is_ascii_punctuation()).flat_map(char::to_lowercase).collect()
}

const VARIANTS: [&str; 10] = ["the", "The", "the,", "cat", "Cat.", "sat", "on", "mat", "a", "A!"];

fn alignment_oracle() -> Outcome {
    let start = Instant::now();
    let mut pairs = 0u64;
    for a in all_sequences(8) {
        let mut rows = vec![vec![0; a.len() + 1]; 9];
        rows[0] = (0..=a.len()).collect();
        walk(&a, &mut Vec::with_capacity(8), &mut rows, 8, &mut pairs)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10_000 {
        let a = common::random_words(&mut rng, 30, &VARIANTS);
        let b = common::random_words(&mut rng, 30, &VARIANTS);
        let s = align(&a, &b);
        let (fa, fb): (Vec<String>, Vec<String>) =
            (a.iter().map(|w| fold(w)).collect(), b.iter().map(|w| fold(w)).collect());
        ensure!(s.edit_cost() == levenshtein(&fa, &fb), "{a:?} vs {b:?}");
        s.validate(&a, &b).map_err(|e| e.to_string())?;
        pairs += 1;
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(60), "{pairs} pairs took {elapsed:.1?}");
    Ok(format!("{pairs} pairs in {elapsed:.1?}"))
}

// ---------------------------------------------------------------- refine

fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(String::from).collect()
}

/// Rebuilds the other sequence from equal spans of the base and the other spans elsewhere,
/// and the base from equal spans of the other and the base spans elsewhere.
fn rebuild(script: &EditScript, base: &[String], other: &[String]) -> (Vec<String>, Vec<String>) {
    let (mut b, mut o) = (Vec::new(), Vec::new());
    for op in &script.ops {
        if op.kind == OpKind::Equal {
            o.extend(base[op.base.clone()].iter().cloned());
            b.extend(other[op.other.clone()].iter().map(|w| fold(w)));
        } else {
            o.extend(other[op.other.clone()].iter().cloned());
            b.extend(base[op.base.clone()].iter().map(|w| fold(w)));
        }
    }
    (b, o)
}

/// Merges random runs of adjacent ops into single replacements.
fn scramble(script: &EditScript, rng: &mut impl Rng) -> EditScript {
    let mut ops: Vec<DiffOp> = Vec::new();
    for op in &script.ops {
        match ops.last_mut() {
            Some(last) if rng.gen_bool(0.4) && last.kind != OpKind::Equal && op.kind != OpKind::Equal => {
                last.kind = OpKind::Replace;
                last.base.end = op.base.end;
                last.other.end = op.other.end;
            }
            _ => ops.push(op.clone()),
        }
    }
    for op in &mut ops {
        if op.kind != OpKind::Equal && !op.base.is_empty() && !op.other.is_empty() {
            op.kind = OpKind::Replace;
        }
    }
    EditScript::new(ops)
}

const REFINE_VOCAB: [&str; 10] = ["no", "thing", "nothing", "hello", "richie", "richard", "a", "an", "the", "then"];

fn refine_preserves() -> Outcome {
    let (b, o) = (words("Hello Richie"), words("Richard"));
    let uneven = EditScript::new(vec![DiffOp::new(OpKind::Replace, 0..2, 0..1)]);
    let want = vec![
        DiffOp::new(OpKind::Delete, 0..1, 0..0),
        DiffOp::new(OpKind::Replace, 1..2, 0..1),
    ];
    ensure!(refine(&uneven, &b, &o).ops == want, "split example gave {:?}", refine(&uneven, &b, &o).ops);
    let (b, o) = (words("no thing"), words("nothing"));
    let merged = refine(&align(&b, &o), &b, &o).ops;
    ensure!(merged == vec![DiffOp::new(OpKind::Replace, 0..2, 0..1)], "merge example gave {merged:?}");

    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..10_000 {
        let a = common::random_words(&mut rng, 12, &REFINE_VOCAB);
        let b = common::random_words(&mut rng, 12, &REFINE_VOCAB);
        let script = scramble(&align(&a, &b), &mut rng);
        script.validate(&a, &b).map_err(|e| format!("fixture: {e}"))?;
        let r = refine(&script, &a, &b);
        r.validate(&a, &b).map_err(|e| format!("{a:?} / {b:?}: {e}"))?;
        let (ra, rb) = rebuild(&r, &a, &b);
        let fa: Vec<String> = a.iter().map(|w| fold(w)).collect();
        ensure!(rb == b && ra == fa, "{a:?} / {b:?} not preserved by {:?}", r.ops);
    }
    Ok("both examples exact; 10000 random scripts preserved".into())
}

// ---------------------------------------------------------------- grouping

const CHARS: &[char] = &['a', 'z', 'é', 'с', 'е', 'т', 'и', 'ж', '中', '文', '😀', '\u{301}'];

fn token_grouping() -> Outcome {
    let tokens = [TokenPiece::text(" с", -0.3), TokenPiece::text("ети", -0.1)];
    let got = group_tokens_into_words(&tokens).map_err(|e| e.to_string())?;
    ensure!(got.len() == 1 && got[0].text == "сети", "got {got:?}");

    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for case in 0..10_000 {
        let ws: Vec<String> = (0..rng.gen_range(0..8))
            .map(|_| (0..rng.gen_range(1..6)).map(|_| *CHARS.choose(&mut rng).unwrap()).collect())
            .collect();
        let text: String = ws.iter().map(|w| format!(" {w}")).collect();
        let bytes = text.as_bytes();
        let mut cuts: Vec<usize> = (0..rng.gen_range(0..20)).map(|_| rng.gen_range(1..bytes.len().max(2))).collect();
        cuts.retain(|&c| c < bytes.len());
        cuts.extend([0, bytes.len()]);
        cuts.sort();
        cuts.dedup();
        let tokens: Vec<TokenPiece> = cuts
            .windows(2)
            .map(|w| TokenPiece::new(bytes[w[0]..w[1]].to_vec(), -rng.gen_range(0.0..5.0)))
            .collect();
        let grouped = group_tokens_into_words(&tokens).map_err(|e| format!("case {case}: {e}"))?;
        let texts: Vec<&str> = grouped.iter().map(|w| w.text.as_str()).collect();
        ensure!(texts == ws, "case {case}: {texts:?} != {ws:?}");
    }
    Ok("example exact; 10000 random tokenizations regrouped".into())
}

// ---------------------------------------------------------------- segmentation

const HOP: f64 = 0.02;

fn spans(segs: &[SpeechSegment]) -> Vec<(f64, f64)> {
    segs.iter().map(|s| (s.start_s, s.end_s)).collect()
}

fn segmentation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for case in 0..10_000 {
        let n = rng.gen_range(0..400);
        // runs of similar values so segments actually form
        let mut p = rng.gen::<f64>();
        let probs: Vec<f64> = (0..n)
            .map(|_| {
                if rng.gen_bool(0.1) {
                    p = rng.gen();
                }
                (p + rng.gen_range(-0.15..0.15)).clamp(0.0, 1.0)
            })
            .collect();
        let onset: f64 = rng.gen_range(0.3..0.9);
        let offset = (onset - rng.gen_range(0.0..0.3)).max(0.01);
        let series = FrameProbSeries::new(probs.clone(), HOP).map_err(|e| e.to_string())?;
        let segs = binarize(&series, onset, offset).map_err(|e| e.to_string())?;
        let want: Vec<(f64, f64)> = hysteresis_frames(&probs, onset, offset)
            .into_iter()
            .map(|(a, b)| (a as f64 * HOP, b as f64 * HOP))
            .collect();
        ensure!(spans(&segs) == want, "binarize case {case}");
        let (min_on, min_off) = (rng.gen_range(0.0..0.5), rng.gen_range(0.0..0.5));
        let smoothed = smooth(&segs, min_on, min_off).map_err(|e| e.to_string())?;
        ensure!(
            spans(&smoothed) == smooth_oracle(&want, min_on, min_off),
            "smooth case {case}"
        );
    }

    for case in 0..1_000 {
        let mut t = 0u32;
        let mut segs = Vec::new();
        for _ in 0..rng.gen_range(1..12) {
            t += rng.gen_range(0..200);
            let len = rng.gen_range(1..4000);
            segs.push(SpeechSegment::new(t as f64 * HOP, (t + len) as f64 * HOP));
            t += len;
        }
        let probs: Vec<f64> = (0..t + 5).map(|_| rng.gen()).collect();
        let series = FrameProbSeries::new(probs, HOP).map_err(|e| e.to_string())?;
        let chunks = cut_and_merge(&segs, &series, 30.0, 1.0).map_err(|e| e.to_string())?;
        for c in &chunks {
            ensure!(c.duration() <= 30.0 + 1e-9, "case {case}: chunk {c:?} over 30 s");
        }
        for s in &segs {
            let mut covered = s.start_s;
            for c in chunks.iter().filter(|c| c.end_s > s.start_s && c.start_s < s.end_s) {
                ensure!(c.start_s <= covered + 1e-9, "case {case}: gap in {s:?}");
                covered = covered.max(c.end_s);
            }
            ensure!(covered + 1e-9 >= s.end_s, "case {case}: {s:?} not covered");
        }
    }
    Ok("10000 sequences binarized and smoothed; 1000 segment sets cut".into())
}

// ---------------------------------------------------------------- WER

fn ternary(mut code: usize, len: usize) -> Vec<&'static str> {
    (0..len)
        .map(|_| {
            let s = SYMBOLS[code % 3];
            code /= 3;
            s
        })
        .collect()
}

fn wer_oracle() -> Outcome {
    let mut cases = 0;
    for lr in 1..=5 {
        for lh in 0..=5 {
            for cr in 0..3usize.pow(lr as u32) {
                for ch in 0..3usize.pow(lh as u32) {
                    let (r, h) = (ternary(cr, lr), ternary(ch, lh));
                    let want = levenshtein(&r, &h) as f64 / r.len() as f64;
                    let got = wer(&r, &h).map_err(|e| e.to_string())?;
                    ensure!(got == want, "{r:?} / {h:?}: {got} vs {want}");
                    ensure!(wer(&r, &r).map_err(|e| e.to_string())? == 0.0, "wer(x, x) for {r:?}");
                    cases += 1;
                }
            }
            let r = ternary(0, lr);
            ensure!(wer(&r, &[] as &[&str]).map_err(|e| e.to_string())? == 1.0, "wer(ref, empty)");
        }
    }
    Ok(format!("{cases} exhaustive pairs"))
}

// ---------------------------------------------------------------- uncertainty

fn mask(flags: Vec<bool>) -> UncertaintyMask {
    UncertaintyMask {
        flags,
        method: MaskMethod::Disagreement,
    }
}

fn scored_transcription(scores: &[f64]) -> Transcription {
    let tokens = scores
        .iter()
        .enumerate()
        .map(|(i, &s)| TokenPiece::text(&format!(" w{i}"), s))
        .collect();
    Transcription::from_tokens(tokens, Default::default(), None).unwrap()
}

fn uncertainty_metrics() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for case in 0..1_000 {
        let n = rng.gen_range(0..60);
        let flags: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
        let targets: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.3)).collect();
        let p = uncertainty_report(&mask(flags.clone()), &targets).map_err(|e| e.to_string())?;
        let flagged = flags.iter().filter(|&&f| f).count();
        let errors = targets.iter().filter(|&&t| t).count();
        let caught = flags.iter().zip(&targets).filter(|(f, t)| **f && **t).count();
        let ratio = if n == 0 { 0.0 } else { flagged as f64 / n as f64 };
        let recall = if errors == 0 { 1.0 } else { caught as f64 / errors as f64 };
        ensure!(
            (p.uncertainty_ratio, p.error_recall) == (ratio, recall),
            "report case {case}: {p:?} vs ({ratio}, {recall})"
        );
    }
    for case in 0..1_000 {
        let scores: Vec<f64> = (0..rng.gen_range(1..40)).map(|_| -rng.gen_range(0.0..5.0)).collect();
        let targets: Vec<bool> = scores.iter().map(|_| rng.gen()).collect();
        let t = scored_transcription(&scores);
        let pts = score_sweep(&t, &targets, &sweep_thresholds(&t)).map_err(|e| e.to_string())?;
        ensure!(
            pts.windows(2).all(|w| w[0].uncertainty_ratio <= w[1].uncertainty_ratio),
            "sweep case {case} not monotone"
        );
    }
    for case in 0..1_000 {
        let n = rng.gen_range(0..30);
        let mut m = || mask((0..n).map(|_| rng.gen()).collect());
        let (a, b, c) = (m(), m(), m());
        let or = |x: &UncertaintyMask, y: &UncertaintyMask| ensemble_masks(&[x.clone(), y.clone()]).unwrap().flags;
        ensure!(or(&a, &b) == or(&b, &a), "commutativity case {case}");
        ensure!(or(&a, &a) == a.flags, "idempotence case {case}");
        ensure!(
            or(&mask(or(&a, &b)), &c) == or(&a, &mask(or(&b, &c))),
            "associativity case {case}"
        );
    }
    Ok("1000 reports, 1000 sweeps, 1000 OR-law triples".into())
}

// ---------------------------------------------------------------- end to end

struct Corpus {
    _dir: tempfile::TempDir,
    wav: std::path::PathBuf,
    words: Vec<(f64, f64, String, f64)>,
}

fn corpus(seed: u64, duration_s: f64) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (samples, utts) = synth_recording(&mut rng, duration_s, 16000);
    let dir = tempfile::tempdir().unwrap();
    let wav = dir.path().join("synthetic.wav");
    write_wav(&wav, &samples, 16000);
    let words = utts.into_iter().flat_map(|u| u.words).collect();
    Corpus { _dir: dir, wav, words }
}

fn recognizer(words: &[(f64, f64, String, f64)]) -> std::sync::Arc<ScriptedRecognizer> {
    let refs: Vec<(f64, f64, &str, f64)> = words.iter().map(|(a, b, w, s)| (*a, *b, w.as_str(), *s)).collect();
    std::sync::Arc::new(ScriptedRecognizer::from_timed_words(&refs))
}

/// Replaces each word with probability `p` by a word from outside the vocabulary.
fn perturb(words: &[(f64, f64, String, f64)], p: f64, rng: &mut impl Rng) -> Vec<(f64, f64, String, f64)> {
    words
        .iter()
        .map(|(a, b, w, s)| (*a, *b, if rng.gen_bool(p) { format!("{w}s") } else { w.clone() }, *s))
        .collect()
}

fn end_to_end_determinism() -> Outcome {
    let c = corpus(21, 180.0);
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let mut backends = Backends::with_recognizer(recognizer(&c.words));
    backends.additional_recognizer = Some(recognizer(&perturb(&c.words, 0.1, &mut rng)));
    backends.tta_recognizer = Some(recognizer(&perturb(&c.words, 0.05, &mut rng)));
    let mut cfg = PipelineConfig::default();
    cfg.uncertainty = UncertaintyMode::Ensemble;
    cfg.ensemble = vec![MaskSource::Scores, MaskSource::Disagreement, MaskSource::Tta];

    let start = Instant::now();
    let mut outputs = Vec::new();
    let mut runs = vec![cfg.worker_count; 5];
    runs.extend([1, 2, 8]);
    for workers in runs {
        cfg.worker_count = workers;
        let r = run_pipeline(&c.wav, &cfg, &backends).map_err(|e| e.to_string())?;
        let json = render(&r.transcription, r.mask.as_ref(), OutputFormat::Json, Some(&cfg.output_summary()))
            .map_err(|e| e.to_string())?;
        ensure!(!r.transcription.words.is_empty(), "empty transcript");
        outputs.push((workers, json));
    }
    let elapsed = start.elapsed();
    for (workers, json) in &outputs[1..] {
        ensure!(*json == outputs[0].1, "output with {workers} workers differs from the first run");
    }
    ensure!(elapsed < Duration::from_secs(30), "8 runs took {elapsed:.1?}");
    Ok(format!(
        "{} runs byte-identical ({} bytes) in {elapsed:.1?}",
        outputs.len(),
        outputs[0].1.len()
    ))
}

// ---------------------------------------------------------------- noise

fn noise_snr() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let mut worst = 0.0f64;
    for case in 0..100 {
        let n = rng.gen_range(100..4000);
        let m = rng.gen_range(10..3000);
        let signal: Vec<f32> = (0..n).map(|_| rng.gen_range(-0.3..0.3)).collect();
        let noise: Vec<f32> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let snr = if case == 0 { 1.0 } else { rng.gen_range(-5.0..30.0) };
        let s = AudioBuffer::new(signal.clone(), 16000).map_err(|e| e.to_string())?;
        let z = AudioBuffer::new(noise.clone(), 16000).map_err(|e| e.to_string())?;
        let mix = mix_noise_detailed(&s, &z, snr).map_err(|e| e.to_string())?;
        let ps: f64 = signal.iter().map(|&x| (x as f64).powi(2)).sum();
        let pn: f64 = (0..n)
            .map(|i| ((noise[i % m] as f64 * mix.noise_scale) as f32 as f64).powi(2))
            .sum();
        let measured = 10.0 * (ps / pn).log10();
        worst = worst.max((measured - snr).abs());
        ensure!((measured - snr).abs() < 0.01, "case {case}: {measured} dB vs {snr} dB");
    }
    Ok(format!("100 pairs incl. 1 dB, worst deviation {worst:.2e} dB"))
}

// ---------------------------------------------------------------- score threshold recall

fn score_threshold_recall() -> Outcome {
    let c = corpus(31, 600.0);
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    // the scripted recognizer errs mostly where its own scores are lowest
    let mut sorted: Vec<f64> = c.words.iter().map(|w| w.3).collect();
    sorted.sort_by(f64::total_cmp);
    let low_band = sorted[sorted.len() / 10];
    let hyp: Vec<(f64, f64, String, f64)> = c
        .words
        .iter()
        .map(|(a, b, w, s)| {
            let p = if *s < low_band { 0.5 } else { 0.05 };
            (*a, *b, if rng.gen_bool(p) { format!("{w}x") } else { w.clone() }, *s)
        })
        .collect();

    let mut cfg = PipelineConfig::default();
    cfg.ast_filter = false;
    let r = run_pipeline(&c.wav, &cfg, &Backends::with_recognizer(recognizer(&hyp)))
        .map_err(|e| e.to_string())?;
    let t = &r.transcription;
    let mut scores: Vec<f64> = t.words.iter().map(|w| w.score).collect();
    scores.sort_by(f64::total_cmp);
    let k = t.words.len() / 20;
    let threshold = (scores[k - 1] + scores[k]) / 2.0;
    let m = mask_from_scores(t, threshold);

    let reference: Vec<&str> = c.words.iter().map(|w| w.2.as_str()).collect();
    let targets = word_error_targets(&reference, &t.word_texts()).map_err(|e| e.to_string())?;
    let p = uncertainty_report(&m, &targets).map_err(|e| e.to_string())?;
    ensure!(
        (p.uncertainty_ratio - 0.05).abs() <= 1.0 / t.words.len() as f64,
        "threshold flags {:.4} of words",
        p.uncertainty_ratio
    );
    ensure!(
        p.error_recall > 0.05,
        "recall {:.3} at ratio {:.3}",
        p.error_recall,
        p.uncertainty_ratio
    );
    Ok(format!(
        "{} words, ratio {:.3}, recall {:.3} > 0.05",
        t.words.len(),
        p.uncertainty_ratio,
        p.error_recall
    ))
}
