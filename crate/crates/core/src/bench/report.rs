use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::Method;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemOutcome {
    pub id: String,
    pub method: Method,
    pub correct: bool,
    pub answer: Option<String>,
    pub error: Option<String>,
    pub trace_id: Option<String>,
    pub elapsed_s: f64,
}

/// Accuracy kept as an exact count; the percentage is for display only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub correct: usize,
    pub total: usize,
    pub accuracy_pct: f64,
}

impl MethodSummary {
    pub fn new(method: Method, correct: usize, total: usize) -> Self {
        let accuracy_pct = if total == 0 { 0.0 } else { 100.0 * correct as f64 / total as f64 };
        MethodSummary {
            method,
            correct,
            total,
            accuracy_pct,
        }
    }

    /// Exact `correct / total`.
    pub fn accuracy(&self) -> (usize, usize) {
        (self.correct, self.total)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelativeGain {
    pub baseline: Method,
    /// `(ours - baseline) / baseline` in percent; absent when the baseline
    /// scored zero.
    pub gain_pct: Option<f64>,
    pub rendered: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub seed: u64,
    pub config_hash: String,
    pub methods: Vec<MethodSummary>,
    /// Gain of `lang2logic` over the chosen baseline.
    pub relative_gain: Option<RelativeGain>,
    /// Gain over every other method, so a reader can compare choices.
    pub gains_by_baseline: Vec<RelativeGain>,
    pub notes: Vec<String>,
    pub items: Vec<ItemOutcome>,
    pub runtime_s: f64,
}

/// Relative gain in percent of `ours` over `baseline`, both given as
/// accuracies on the same scale.
pub fn relative_gain(ours: f64, baseline: f64) -> Option<f64> {
    (baseline != 0.0).then(|| 100.0 * (ours - baseline) / baseline)
}

/// Signed, one decimal, with a percent sign: `+17.6%`.
pub fn format_gain(gain_pct: f64) -> String {
    let rounded = (gain_pct * 10.0).round() / 10.0;
    let rounded = if rounded == 0.0 { 0.0 } else { rounded };
    format!("{}{rounded:.1}%", if rounded >= 0.0 { "+" } else { "" })
}

fn gain_over(ours: &MethodSummary, base: &MethodSummary) -> RelativeGain {
    let gain_pct = relative_gain(ours.accuracy_pct, base.accuracy_pct);
    RelativeGain {
        baseline: base.method,
        gain_pct,
        rendered: gain_pct.map(format_gain).unwrap_or_else(|| "n/a".into()),
    }
}

impl BenchReport {
    pub(super) fn assemble(
        items: Vec<ItemOutcome>,
        methods: &[Method],
        total: usize,
        baseline_override: Option<Method>,
        config_hash: String,
        seed: u64,
        runtime_s: f64,
    ) -> BenchReport {
        let summaries: Vec<MethodSummary> = methods
            .iter()
            .map(|&m| {
                let correct = items.iter().filter(|i| i.method == m && i.correct).count();
                MethodSummary::new(m, correct, total)
            })
            .collect();
        let mut notes = Vec::new();
        let ours = summaries.iter().find(|s| s.method == Method::Lang2logic);
        let others: Vec<&MethodSummary> = summaries.iter().filter(|s| s.method != Method::Lang2logic).collect();
        // counts share a denominator, so comparing them compares accuracies exactly
        let best = others.iter().copied().fold(None::<&MethodSummary>, |acc, s| match acc {
            Some(b) if b.correct >= s.correct => Some(b),
            _ => Some(s),
        });
        let chosen = match baseline_override {
            Some(m) => {
                let found = others.iter().copied().find(|s| s.method == m);
                if found.is_none() {
                    notes.push(format!("requested baseline {} was not run", m.as_str()));
                } else if let Some(b) = best.filter(|b| b.method != m && b.correct > found.map_or(0, |f| f.correct)) {
                    notes.push(format!(
                        "baseline fixed to {}; the best-scoring baseline is {}",
                        m.as_str(),
                        b.method.as_str()
                    ));
                }
                found
            }
            None => best,
        };
        let (relative_gain, gains_by_baseline) = match ours {
            Some(o) => (
                chosen.map(|b| gain_over(o, b)),
                others.iter().map(|b| gain_over(o, b)).collect(),
            ),
            None => (None, Vec::new()),
        };
        BenchReport {
            seed,
            config_hash,
            methods: summaries,
            relative_gain,
            gains_by_baseline,
            notes,
            items,
            runtime_s,
        }
    }

    /// Copy with every wall-clock field zeroed, for comparing runs.
    pub fn without_timing(&self) -> BenchReport {
        let mut r = self.clone();
        r.runtime_s = 0.0;
        for i in &mut r.items {
            i.elapsed_s = 0.0;
        }
        r
    }

    pub fn summary(&self, method: Method) -> Option<&MethodSummary> {
        self.methods.iter().find(|s| s.method == method)
    }
}

/// Plain-text table of per-method accuracy and the headline gain.
pub fn render_table(report: &BenchReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<12} {:>9} {:>10}", "method", "correct", "accuracy");
    for s in &report.methods {
        let _ = writeln!(
            out,
            "{:<12} {:>9} {:>9.1}%",
            s.method.as_str(),
            format!("{}/{}", s.correct, s.total),
            s.accuracy_pct
        );
    }
    if let Some(g) = &report.relative_gain {
        let _ = writeln!(out, "relative gain vs {}: {}", g.baseline.as_str(), g.rendered);
    }
    for n in &report.notes {
        let _ = writeln!(out, "note: {n}");
    }
    let _ = writeln!(out, "seed {} config {}", report.seed, &report.config_hash[..report.config_hash.len().min(12)]);
    out
}
