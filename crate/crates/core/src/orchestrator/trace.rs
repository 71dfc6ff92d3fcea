//! Reasoning traces, their append-only JSON-lines log, and text rendering.

use std::fmt::Write as _;
use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::refine::RefinementStep;
use super::Query;
use crate::executor::ExecutionResult;
use crate::model::{describe_violations, FormalModel, SchemaViolation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelCandidate {
    /// Formalization round, 0 for the first request.
    pub round: usize,
    /// Sampling index within the round.
    pub index: usize,
    pub raw: String,
    pub model: Option<FormalModel>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub violations: Vec<SchemaViolation>,
}

/// Whitespace-token lengths of the generated model, plan, and program.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenCounts {
    pub model: usize,
    pub plan: usize,
    pub program: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Outcome {
    Solved,
    BudgetExhausted { cause: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReasoningTrace {
    pub trace_id: String,
    pub prompt_version: String,
    pub query: Query,
    pub model_candidates: Vec<ModelCandidate>,
    pub chosen_model: Option<FormalModel>,
    pub logic_plan: String,
    pub program: String,
    pub execution: Option<ExecutionResult>,
    pub final_answer: Option<String>,
    pub refinement_steps: Vec<RefinementStep>,
    pub token_counts: TokenCounts,
    #[serde(flatten)]
    pub outcome: Outcome,
    pub elapsed_s: f64,
}

impl ReasoningTrace {
    /// Copy with wall-clock fields zeroed, for determinism comparisons.
    pub fn without_timing(&self) -> ReasoningTrace {
        let mut t = self.clone();
        t.elapsed_s = 0.0;
        if let Some(e) = t.execution.as_mut() {
            e.elapsed = 0.0;
        }
        t
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("trace serializes")
    }

    pub fn is_solved(&self) -> bool {
        self.outcome == Outcome::Solved
    }
}

#[derive(Debug, Error)]
pub enum TraceLookupError {
    #[error("trace {0} not found")]
    NotFound(String),
    #[error("trace log: {0}")]
    Io(#[from] io::Error),
    #[error("trace log line {line}: {message}")]
    Corrupt { line: usize, message: String },
}

/// Append-only JSON-lines trace log. Safe for concurrent appends from one
/// process.
pub struct TraceLog {
    path: PathBuf,
    lock: Mutex<()>,
}

impl TraceLog {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        TraceLog {
            path: path.into(),
            lock: Mutex::new(()),
        }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&self, trace: &ReasoningTrace) -> io::Result<()> {
        let mut line = trace.to_json_line();
        line.push('\n');
        let _guard = self.lock.lock().unwrap();
        if let Some(dir) = self.path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let mut f = OpenOptions::new().create(true).append(true).open(&self.path)?;
        f.write_all(line.as_bytes())
    }

    /// The most recently appended trace with `trace_id`.
    pub fn find(&self, trace_id: &str) -> Result<ReasoningTrace, TraceLookupError> {
        find_trace(&self.path, trace_id)
    }
}

pub fn find_trace(path: &Path, trace_id: &str) -> Result<ReasoningTrace, TraceLookupError> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Err(TraceLookupError::NotFound(trace_id.into())),
        Err(e) => return Err(e.into()),
    };
    let mut found = None;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let t: ReasoningTrace = serde_json::from_str(&line).map_err(|e| TraceLookupError::Corrupt {
            line: i + 1,
            message: e.to_string(),
        })?;
        if t.trace_id == trace_id {
            found = Some(t);
        }
    }
    found.ok_or_else(|| TraceLookupError::NotFound(trace_id.into()))
}

/// Plain-text report of one trace.
pub fn render_trace(t: &ReasoningTrace) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "trace {} (prompts {})", t.trace_id, t.prompt_version);
    let _ = writeln!(s, "question: {}", t.query.question);
    match &t.outcome {
        Outcome::Solved => {
            let _ = writeln!(s, "outcome: solved, answer {}", t.final_answer.as_deref().unwrap_or("-"));
        }
        Outcome::BudgetExhausted { cause } => {
            let _ = writeln!(s, "outcome: BudgetExhausted ({cause})");
        }
    }
    let _ = writeln!(s, "\n== model ({} candidates sampled)", t.model_candidates.len());
    match &t.chosen_model {
        Some(m) => s.push_str(&m.to_document()),
        None => {
            s.push_str("no valid model\n");
            if let Some(c) = t.model_candidates.last() {
                let _ = writeln!(s, "{}", describe_violations(&c.violations));
            }
        }
    }
    let _ = writeln!(s, "\n== logic plan\n{}", t.logic_plan);
    let _ = writeln!(s, "\n== program\n{}", t.program);
    let _ = writeln!(s, "\n== execution");
    match &t.execution {
        Some(e) => {
            let _ = writeln!(s, "status: {}", e.status.as_str());
            let _ = writeln!(s, "answer: {}", e.answer.as_deref().unwrap_or("-"));
            if !e.stderr_excerpt.is_empty() {
                let _ = writeln!(s, "stderr: {}", e.stderr_excerpt);
            }
            let _ = writeln!(s, "elapsed: {:.3}s", e.elapsed);
        }
        None => s.push_str("not executed\n"),
    }
    let _ = writeln!(s, "\n== refinement ({} steps)", t.refinement_steps.len());
    for step in &t.refinement_steps {
        let _ = writeln!(s, "{}. {:?}: {}", step.attempt, step.kind, step.cause);
    }
    let c = t.token_counts;
    let _ = writeln!(s, "\n== tokens: model {}, plan {}, program {}", c.model, c.plan, c.program);
    s
}
