use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use longform_core::pipeline::evaluate::{evaluate, pair_references, EvalManifest};
use longform_core::pipeline::output::{manifest_path_for, render, OutputFormat, RunManifest};
use longform_core::pipeline::{run_pipeline, BackendFactory, Chunking, PipelineConfig, UncertaintyMode};

#[derive(Parser)]
#[command(name = "longform", version, about = "Long-form speech transcription")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Transcribe one WAV file.
    Transcribe {
        audio: PathBuf,
        #[arg(long)]
        chunking: Option<Chunking>,
        /// Skip the audio-event filter.
        #[arg(long)]
        no_ast: bool,
        #[arg(long)]
        uncertainty: Option<UncertaintyMode>,
        #[arg(long, allow_negative_numbers = true)]
        score_threshold: Option<f64>,
        #[arg(long, default_value = "text")]
        format: OutputFormat,
        #[arg(long)]
        workers: Option<usize>,
        /// Key-value config file; flags given on the command line win.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output file (default: the audio path with the format's extension).
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Also print the transcript to stdout.
        #[arg(long)]
        print: bool,
    },
    /// Evaluate against reference transcripts listed in a JSON manifest.
    Evaluate {
        manifest: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Report file (default: next to the manifest).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig> {
    let mut config = match path {
        Some(p) => PipelineConfig::from_file(p).with_context(|| format!("config {}", p.display()))?,
        None => PipelineConfig::default(),
    };
    config.apply_env(|k| std::env::var(k).ok())?;
    Ok(config)
}

fn command_line() -> String {
    std::env::args().collect::<Vec<_>>().join(" ")
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Transcribe {
            audio,
            chunking,
            no_ast,
            uncertainty,
            score_threshold,
            format,
            workers,
            config,
            output,
            print,
        } => {
            let mut cfg = load_config(config.as_deref())?;
            if let Some(c) = chunking {
                cfg.chunking = c;
            }
            if no_ast {
                cfg.ast_filter = false;
            }
            if let Some(u) = uncertainty {
                cfg.uncertainty = u;
            }
            if let Some(t) = score_threshold {
                cfg.score_threshold = t;
            }
            if let Some(w) = workers {
                cfg.worker_count = w;
            }
            cfg.validate()?;
            let backends = BackendFactory::new(cfg.endpoints.clone()).build(Some(&audio))?;
            let result = run_pipeline(&audio, &cfg, &backends)?;
            let summary = cfg.output_summary();
            let rendered = render(&result.transcription, result.mask.as_ref(), format, Some(&summary))?;
            let out = output.unwrap_or_else(|| audio.with_extension(format.extension()));
            std::fs::write(&out, &rendered).with_context(|| format!("writing {}", out.display()))?;
            if print {
                print!("{rendered}");
            }
            let mut manifest = RunManifest::new(command_line(), &cfg);
            manifest.inputs.push(audio);
            manifest.outputs.push(out.clone());
            manifest.timing.push(result.timing);
            manifest.diagnostics.push(result.diagnostics);
            manifest.write(manifest_path_for(&out))?;
            eprintln!("wrote {}", out.display());
        }
        Command::Evaluate {
            manifest,
            config,
            output,
        } => {
            let m = EvalManifest::load(&manifest)?;
            let cfg = load_config(config.as_deref().or(m.config.as_deref()))?;
            cfg.validate()?;
            let items = pair_references(&m.audio, &m.references)?;
            if items.is_empty() {
                bail!("manifest lists no audio files");
            }
            let factory = BackendFactory::new(cfg.endpoints.clone());
            let summary = evaluate(&items, &cfg, &|a| factory.build(Some(a)))?;
            for f in &summary.files {
                let recall = f
                    .uncertainty
                    .map(|p| format!("  uncertain {:.3}  recall {:.3}", p.uncertainty_ratio, p.error_recall))
                    .unwrap_or_default();
                println!("{}  WER {:.4}{recall}", f.audio.display(), f.report.wer);
            }
            println!("mean WER {:.4} over {} files", summary.mean_wer, summary.files.len());
            if let Some(t) = summary.timing.total {
                println!("time per file: max {:.3} s, mean {:.3} s, median {:.3} s", t.max, t.mean, t.median);
            }
            let out = output.unwrap_or_else(|| manifest.with_extension("report.json"));
            let mut text = serde_json::to_string_pretty(&summary)?;
            text.push('\n');
            std::fs::write(&out, text).with_context(|| format!("writing {}", out.display()))?;
            let mut run = RunManifest::new(command_line(), &cfg);
            run.inputs = items.iter().map(|i| i.audio.clone()).collect();
            run.outputs.push(out.clone());
            run.timing = summary.files.iter().map(|f| f.timing.clone()).collect();
            run.write(manifest_path_for(&out))?;
            eprintln!("wrote {}", out.display());
        }
    }
    Ok(())
}
