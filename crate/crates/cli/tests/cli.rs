use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

const RATE: u32 = 16000;

fn longform() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_longform"));
    for (k, _) in std::env::vars() {
        if k.starts_with("LONGFORM_") {
            cmd.env_remove(k);
        }
    }
    cmd
}

fn run(cmd: &mut Command) -> Output {
    let out = cmd.output().unwrap();
    assert!(
        out.status.success(),
        "{:?} failed: {}",
        cmd,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// Two tone bursts in 10 s of silence.
fn write_recording(path: &Path) {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: RATE,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut w = hound::WavWriter::create(path, spec).unwrap();
    for i in 0..10 * RATE {
        let t = i as f64 / RATE as f64;
        let on = (1.0..3.0).contains(&t) || (6.0..8.5).contains(&t);
        let s = if on { 0.3 * (2.0 * std::f64::consts::PI * 250.0 * t).sin() } else { 0.0 };
        w.write_sample((s * 32767.0) as i16).unwrap();
    }
    w.finalize().unwrap();
}

/// Recognizer script: one word per 0.5 s inside the bursts, the last word of each burst low-scored.
fn write_script(path: &Path, words: &[&str]) {
    let starts = [1.0, 1.5, 2.0, 2.5, 6.0, 6.5, 7.0, 7.5];
    let segments: Vec<Value> = words
        .iter()
        .zip(starts)
        .enumerate()
        .map(|(i, (w, s))| {
            let logprob = if i % 4 == 3 { -2.5 } else { -0.1 };
            json!({"start_s": s, "end_s": s + 0.5, "tokens": [{"text": format!(" {w}"), "logprob": logprob}]})
        })
        .collect();
    std::fs::write(path, json!({ "segments": segments }).to_string()).unwrap();
}

const WORDS: [&str; 8] = ["long", "form", "speech", "is", "cut", "into", "short", "chunks"];

fn fixture(dir: &Path, stem: &str, words: &[&str]) -> PathBuf {
    let wav = dir.join(format!("{stem}.wav"));
    write_recording(&wav);
    write_script(&dir.join(format!("{stem}.script.json")), words);
    wav
}

fn script_endpoint(dir: &Path) -> String {
    format!("script:{}/{{stem}}.script.json", dir.display())
}

#[test]
fn transcribe_writes_json_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let wav = fixture(dir.path(), "talk", &WORDS);
    let out = dir.path().join("talk.json");
    run(longform()
        .env("LONGFORM_RECOGNIZER", script_endpoint(dir.path()))
        .args(["transcribe", "--format", "json", "--uncertainty", "scores", "--score-threshold", "-1"])
        .arg(&wav)
        .arg("-o")
        .arg(&out));

    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let words: Vec<&str> = doc["words"].as_array().unwrap().iter().map(|w| w["text"].as_str().unwrap()).collect();
    assert_eq!(words, WORDS);
    let flagged: Vec<&str> = doc["words"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|w| w["uncertain"] == json!(true))
        .map(|w| w["text"].as_str().unwrap())
        .collect();
    assert_eq!(flagged, ["is", "chunks"]);

    let manifest: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("talk.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["tool"], "longform");
    assert_eq!(manifest["outputs"][0], json!(out));
    assert!(manifest["timing"][0]["total_s"].as_f64().unwrap() >= 0.0);
}

#[test]
fn transcribe_text_to_default_path_and_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let wav = fixture(dir.path(), "talk", &WORDS);
    let out = run(longform()
        .env("LONGFORM_RECOGNIZER", script_endpoint(dir.path()))
        .args(["transcribe", "--print", "--workers", "2", "--no-ast"])
        .arg(&wav));
    let written = std::fs::read_to_string(dir.path().join("talk.txt")).unwrap();
    assert_eq!(String::from_utf8(out.stdout).unwrap(), written);
    assert_eq!(written.split_whitespace().collect::<Vec<_>>(), WORDS);
}

#[test]
fn config_file_drives_an_adapter_recognizer_with_html_output() {
    let dir = tempfile::tempdir().unwrap();
    let wav = fixture(dir.path(), "talk", &WORDS);
    let config = dir.path().join("run.conf");
    std::fs::write(
        &config,
        format!(
            "# recognizer behind the line protocol\nrecognizer = cmd:{} {}\nuncertainty = scores\nscore_threshold = -1\n",
            env!("CARGO_BIN_EXE_echo-adapter"),
            dir.path().join("talk.script.json").display()
        ),
    )
    .unwrap();
    let out = dir.path().join("talk.html");
    run(longform()
        .args(["transcribe", "--format", "html", "--config"])
        .arg(&config)
        .arg(&wav)
        .arg("-o")
        .arg(&out));
    let html = std::fs::read_to_string(&out).unwrap();
    assert!(html.contains(r#"<mark class="uncertain">is</mark>"#), "{html}");
    assert!(html.contains("speech"));
}

#[test]
fn bad_config_key_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let wav = fixture(dir.path(), "talk", &WORDS);
    let config = dir.path().join("bad.conf");
    std::fs::write(&config, "no_such_key = 1\n").unwrap();
    let out = longform().args(["transcribe", "--config"]).arg(&config).arg(&wav).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("no_such_key"));
}

#[test]
fn evaluate_reports_wer_per_file() {
    let dir = tempfile::tempdir().unwrap();
    let refs = dir.path().join("refs");
    std::fs::create_dir(&refs).unwrap();
    fixture(dir.path(), "exact", &WORDS);
    let mut wrong = WORDS;
    wrong[2] = "peach";
    fixture(dir.path(), "off", &wrong);
    std::fs::write(refs.join("exact.txt"), WORDS.join(" ")).unwrap();
    std::fs::write(refs.join("off.txt"), WORDS.join(" ")).unwrap();
    let config = dir.path().join("eval.conf");
    std::fs::write(&config, format!("recognizer = {}\n", script_endpoint(dir.path()))).unwrap();
    let manifest = dir.path().join("set.json");
    std::fs::write(
        &manifest,
        json!({"audio": ["exact.wav", "off.wav"], "references": "refs", "config": "eval.conf"}).to_string(),
    )
    .unwrap();

    let out = run(longform().arg("evaluate").arg(&manifest));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("exact.wav  WER 0.0000"), "{stdout}");
    assert!(stdout.contains("off.wav  WER 0.1250"), "{stdout}");
    assert!(stdout.contains("mean WER 0.0625 over 2 files"), "{stdout}");
    assert!(stdout.contains("median"), "{stdout}");
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("set.report.json")).unwrap()).unwrap();
    assert_eq!(report["mean_wer"], json!(0.0625));
    assert!(dir.path().join("set.report.manifest.json").exists());
}

#[test]
fn evaluate_fails_on_missing_reference() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::create_dir(dir.path().join("refs")).unwrap();
    fixture(dir.path(), "lonely", &WORDS);
    let manifest = dir.path().join("set.json");
    std::fs::write(&manifest, json!({"audio": ["lonely.wav"], "references": "refs"}).to_string()).unwrap();
    let out = longform().arg("evaluate").arg(&manifest).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("lonely"));
}

#[test]
fn conformance_passes_on_echo_adapter() {
    let out = run(Command::new(env!("CARGO_BIN_EXE_adapter-conformance")).arg(env!("CARGO_BIN_EXE_echo-adapter")));
    assert!(String::from_utf8_lossy(&out.stdout).contains("all checks passed"));
}

#[test]
fn conformance_fails_on_a_non_adapter() {
    for program in ["cat", "true"] {
        let out = Command::new(env!("CARGO_BIN_EXE_adapter-conformance")).arg(program).output().unwrap();
        assert!(!out.status.success(), "{program} passed conformance");
        assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"), "{program}");
    }
}
