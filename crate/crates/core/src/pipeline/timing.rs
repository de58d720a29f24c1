use std::time::Instant;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTime {
    pub stage: String,
    pub seconds: f64,
}

/// Wall-clock seconds per stage of one run, in execution order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub stages: Vec<StageTime>,
    pub total_s: f64,
}

impl TimingReport {
    pub fn stage(&self, name: &str) -> Option<f64> {
        self.stages.iter().find(|s| s.stage == name).map(|s| s.seconds)
    }

    pub fn max_stage_s(&self) -> f64 {
        self.stages.iter().map(|s| s.seconds).fold(0.0, f64::max)
    }
}

/// Accumulates stage timings while a run progresses.
#[derive(Debug)]
pub(crate) struct Stopwatch {
    started: Instant,
    report: TimingReport,
}

impl Stopwatch {
    pub(crate) fn start() -> Self {
        Self {
            started: Instant::now(),
            report: TimingReport::default(),
        }
    }

    pub(crate) fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.report.stages.push(StageTime {
            stage: stage.to_string(),
            seconds: t.elapsed().as_secs_f64(),
        });
        out
    }

    pub(crate) fn finish(mut self) -> TimingReport {
        let sum: f64 = self.report.stages.iter().map(|s| s.seconds).sum();
        // the clock covers the gaps between stages too, but never less than their sum
        self.report.total_s = self.started.elapsed().as_secs_f64().max(sum);
        self.report
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub max: f64,
    pub mean: f64,
    pub median: f64,
}

impl Spread {
    pub fn of(values: &[f64]) -> Option<Spread> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let median = if n % 2 == 1 {
            v[n / 2]
        } else {
            (v[n / 2 - 1] + v[n / 2]) / 2.0
        };
        Some(Spread {
            max: v[n - 1],
            mean: v.iter().sum::<f64>() / n as f64,
            median,
        })
    }
}

/// Per-file totals and per-stage times summarised across a corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingSummary {
    pub files: usize,
    pub total: Option<Spread>,
    pub stages: Vec<(String, Spread)>,
}

impl TimingSummary {
    pub fn from_reports(reports: &[TimingReport]) -> TimingSummary {
        let totals: Vec<f64> = reports.iter().map(|r| r.total_s).collect();
        let mut names: Vec<&str> = Vec::new();
        for r in reports {
            for s in &r.stages {
                if !names.contains(&s.stage.as_str()) {
                    names.push(&s.stage);
                }
            }
        }
        let stages = names
            .into_iter()
            .filter_map(|name| {
                let v: Vec<f64> = reports.iter().filter_map(|r| r.stage(name)).collect();
                Spread::of(&v).map(|s| (name.to_string(), s))
            })
            .collect();
        TimingSummary {
            files: reports.len(),
            total: Spread::of(&totals),
            stages,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spread_even_and_odd() {
        let s = Spread::of(&[3.0, 1.0, 2.0]).unwrap();
        assert_eq!((s.max, s.mean, s.median), (3.0, 2.0, 2.0));
        let s = Spread::of(&[4.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(s.median, 2.5);
        assert!(Spread::of(&[]).is_none());
    }

    #[test]
    fn stopwatch_total_covers_stages() {
        let mut w = Stopwatch::start();
        w.time("a", || std::thread::sleep(std::time::Duration::from_millis(2)));
        w.time("b", || ());
        let r = w.finish();
        assert_eq!(r.stages.len(), 2);
        assert!(r.total_s >= r.max_stage_s());
        assert!(r.stages.iter().all(|s| s.seconds >= 0.0));
    }
}
