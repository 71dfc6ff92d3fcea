//! Benchmark harness: task files, the three solve methods, accuracy and
//! relative-gain reporting.

mod report;
mod task_file;
pub mod toy;

use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::executor::{answers_match, execute, normalize_answer, Executor, DEFAULT_TOLERANCE};
use crate::llm::{ChatClient, ChatMessage, ChatRequest};
use crate::orchestrator::prompts::{render, COT_TEMPLATE, PAL_TEMPLATE, PROMPT_VERSION};
use crate::orchestrator::{extract_program, solve, Query, SolveConfig, TraceLog};
use crate::par::parallel_map;

pub use report::{format_gain, relative_gain, render_table, BenchReport, ItemOutcome, MethodSummary, RelativeGain};
pub use task_file::{load_seed_corpus, load_task_file, parse_seed_corpus, parse_task_file, TaskFileInvalid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Formalize, then program.
    Lang2logic,
    /// Question straight to a program.
    Pal,
    /// Step-by-step text ending in an answer line.
    Cot,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Lang2logic => "lang2logic",
            Method::Pal => "pal",
            Method::Cot => "cot",
        }
    }

    pub fn parse(s: &str) -> Option<Method> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lang2logic" | "ours" => Some(Method::Lang2logic),
            "pal" => Some(Method::Pal),
            "cot" => Some(Method::Cot),
            _ => None,
        }
    }
}

/// Endpoints used by a bench run. Baselines talk to `baseline`.
#[derive(Clone)]
pub struct BenchEndpoints {
    pub ogf: Arc<dyn ChatClient>,
    pub lg: Arc<dyn ChatClient>,
    pub baseline: Arc<dyn ChatClient>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub solve: SolveConfig,
    /// Items run concurrently.
    pub parallelism: usize,
    /// Wall budget for one item under one method.
    pub item_timeout_s: f64,
    pub seed: u64,
    /// Fixes the baseline for the relative gain instead of picking the best.
    pub baseline: Option<Method>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            solve: SolveConfig::default(),
            parallelism: 4,
            item_timeout_s: 120.0,
            seed: 0,
            baseline: None,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.parallelism == 0 {
            return Err("parallelism must be at least 1".into());
        }
        if !(self.item_timeout_s.is_finite() && self.item_timeout_s > 0.0) {
            return Err("item_timeout_s must be positive".into());
        }
        self.solve.limits.validate()
    }

    /// Stable digest of the settings that influence outcomes.
    pub fn hash(&self, methods: &[Method]) -> String {
        let mut h = Sha256::new();
        let body = serde_json::json!({ "config": self, "methods": methods, "prompts": PROMPT_VERSION });
        h.update(body.to_string().as_bytes());
        hex::encode(h.finalize())
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    TaskFile(#[from] TaskFileInvalid),
    #[error("invalid bench config: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Whether `raw` matches the query's gold answer under its answer kind.
pub fn is_correct(raw: &str, query: &Query) -> bool {
    let (Some(gold), Some(kind)) = (query.gold_answer.as_deref(), query.answer_kind) else {
        return false;
    };
    let (Ok(gold), Ok(got)) = (normalize_answer(gold, Some(kind)), normalize_answer(raw, Some(kind))) else {
        return false;
    };
    answers_match(&got, &gold, DEFAULT_TOLERANCE)
}

/// Text after the last `Answer:` marker, up to the end of that line.
pub fn extract_cot_answer(completion: &str) -> Option<String> {
    let lower = completion.to_ascii_lowercase();
    let at = lower.rfind("answer:")?;
    let rest = &completion[at + "answer:".len()..];
    let line = rest.lines().next().unwrap_or("").trim();
    (!line.is_empty()).then(|| line.to_string())
}

pub fn cot_prompt(query: &Query) -> String {
    render(COT_TEMPLATE, &[("question", &query.question), ("instruction", &query.instruction)])
}

pub fn pal_prompt(query: &Query) -> String {
    render(PAL_TEMPLATE, &[("question", &query.question), ("instruction", &query.instruction)])
}

/// Result of one method on one item before scoring.
#[derive(Debug, Clone, PartialEq)]
struct Attempt {
    answer: Option<String>,
    error: Option<String>,
    trace: Option<crate::orchestrator::ReasoningTrace>,
}

impl Attempt {
    fn error(e: impl ToString) -> Self {
        Attempt {
            answer: None,
            error: Some(e.to_string()),
            trace: None,
        }
    }
}

fn run_cot(query: &Query, client: &dyn ChatClient, seed: u64) -> Attempt {
    let req = ChatRequest::new(vec![ChatMessage::user(cot_prompt(query))]).with_seed(Some(seed));
    match client.complete(&req) {
        Ok(text) => match extract_cot_answer(&text) {
            Some(a) => Attempt {
                answer: Some(a),
                error: None,
                trace: None,
            },
            None => Attempt::error("no answer line"),
        },
        Err(e) => Attempt::error(e),
    }
}

fn run_pal(query: &Query, client: &dyn ChatClient, executor: &dyn Executor, cfg: &BenchConfig, seed: u64) -> Attempt {
    let req = ChatRequest::new(vec![ChatMessage::user(pal_prompt(query))]).with_seed(Some(seed));
    let text = match client.complete(&req) {
        Ok(t) => t,
        Err(e) => return Attempt::error(e),
    };
    let program = match extract_program(&text) {
        Ok((_, p)) => p,
        Err(e) => return Attempt::error(e),
    };
    let result = execute(&program, &cfg.solve.limits, executor);
    match result.answer.clone().filter(|_| result.is_ok()) {
        Some(a) => Attempt {
            answer: Some(a),
            error: None,
            trace: None,
        },
        None => Attempt::error(result.diagnostic()),
    }
}

fn run_ours(query: &Query, endpoints: &BenchEndpoints, executor: &dyn Executor, cfg: &BenchConfig, seed: u64) -> Attempt {
    let solve_cfg = SolveConfig {
        seed: Some(seed),
        ..cfg.solve.clone()
    };
    match solve(query, endpoints.ogf.as_ref(), endpoints.lg.as_ref(), executor, &solve_cfg) {
        Ok(trace) => Attempt {
            answer: trace.final_answer.clone(),
            error: match &trace.outcome {
                crate::orchestrator::Outcome::Solved => None,
                crate::orchestrator::Outcome::BudgetExhausted { cause } => Some(format!("budget exhausted: {cause}")),
            },
            trace: Some(trace),
        },
        Err(e) => Attempt::error(e),
    }
}

/// Per-item sampling seed derived from the run seed and item id.
pub fn item_seed(run_seed: u64, item_id: &str) -> u64 {
    let digest = Sha256::new().chain_update(run_seed.to_le_bytes()).chain_update(item_id.as_bytes()).finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

/// Runs one attempt on a helper thread so a stuck endpoint cannot hold the
/// whole run. A timed-out helper is left to finish on its own.
fn attempt_with_timeout(
    method: Method,
    query: &Query,
    endpoints: &BenchEndpoints,
    executor: &Arc<dyn Executor>,
    cfg: &BenchConfig,
) -> Attempt {
    let (tx, rx) = mpsc::channel();
    let (query, endpoints, executor, cfg2) = (query.clone(), endpoints.clone(), Arc::clone(executor), cfg.clone());
    std::thread::spawn(move || {
        let seed = item_seed(cfg2.seed, &query.id);
        let attempt = match method {
            Method::Lang2logic => run_ours(&query, &endpoints, executor.as_ref(), &cfg2, seed),
            Method::Pal => run_pal(&query, endpoints.baseline.as_ref(), executor.as_ref(), &cfg2, seed),
            Method::Cot => run_cot(&query, endpoints.baseline.as_ref(), seed),
        };
        let _ = tx.send(attempt);
    });
    match rx.recv_timeout(Duration::from_secs_f64(cfg.item_timeout_s)) {
        Ok(a) => a,
        Err(mpsc::RecvTimeoutError::Timeout) => Attempt::error(format!("timed out after {}s", cfg.item_timeout_s)),
        Err(mpsc::RecvTimeoutError::Disconnected) => Attempt::error("solver thread panicked"),
    }
}

/// Attempts every item once per method and assembles the report. Endpoint
/// failures count as incorrect for that item only. Traces of the main
/// method are appended to `trace_log` when given.
pub fn run_bench(
    tasks: &[Query],
    methods: &[Method],
    endpoints: &BenchEndpoints,
    executor: Arc<dyn Executor>,
    cfg: &BenchConfig,
    trace_log: Option<&TraceLog>,
) -> Result<BenchReport, BenchError> {
    cfg.validate().map_err(BenchError::Config)?;
    if methods.is_empty() {
        return Err(BenchError::Config("no methods selected".into()));
    }
    let start = Instant::now();
    let mut methods = methods.to_vec();
    methods.sort();
    methods.dedup();

    let mut items = Vec::new();
    for &method in &methods {
        let attempts = parallel_map(tasks, cfg.parallelism, |_, q| {
            let t = Instant::now();
            (attempt_with_timeout(method, q, endpoints, &executor, cfg), t.elapsed().as_secs_f64())
        });
        for (q, (attempt, elapsed_s)) in tasks.iter().zip(attempts) {
            let trace_id = match (&attempt.trace, trace_log) {
                (Some(t), Some(log)) => {
                    log.append(t)?;
                    Some(t.trace_id.clone())
                }
                (Some(t), None) => Some(t.trace_id.clone()),
                _ => None,
            };
            items.push(ItemOutcome {
                id: q.id.clone(),
                method,
                correct: attempt.answer.as_deref().is_some_and(|a| is_correct(a, q)),
                answer: attempt.answer,
                error: attempt.error,
                trace_id,
                elapsed_s,
            });
        }
    }
    Ok(BenchReport::assemble(
        items,
        &methods,
        tasks.len(),
        cfg.baseline,
        cfg.hash(&methods),
        cfg.seed,
        start.elapsed().as_secs_f64(),
    ))
}

/// Writes `report.json` and `report.txt` under `dir`.
pub fn persist_report(report: &BenchReport, dir: &Path) -> std::io::Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join("report.json");
    std::fs::write(&path, serde_json::to_string_pretty(report).expect("report serializes") + "\n")?;
    std::fs::write(dir.join("report.txt"), render_table(report))?;
    Ok(path)
}
