//! The two-stage solve pipeline: formalize a question into a model, generate
//! a plan and program from the model, execute, and refine on failure.

pub mod extract;
pub mod prompts;
pub mod refine;
pub mod trace;

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::executor::{execute, normalize_answer, AnswerKind, ExecutionLimits, Executor};
use crate::llm::{sample_n, ChatClient, ChatMessage, ChatRequest, LlmError};
use crate::model::{describe_violations, parse_model, FormalModel};

pub use extract::{extract_model_document, extract_program, ExtractError};
pub use refine::{decide_refinement, Decision, Failure, FailureKind, RefinePolicy, RefinementKind, RefinementStep};
pub use trace::{find_trace, render_trace, ModelCandidate, Outcome, ReasoningTrace, TokenCounts, TraceLog, TraceLookupError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub id: String,
    pub question: String,
    #[serde(default)]
    pub instruction: String,
    #[serde(default)]
    pub gold_answer: Option<String>,
    #[serde(default)]
    pub answer_kind: Option<AnswerKind>,
}

impl Query {
    pub fn new(id: impl Into<String>, question: impl Into<String>) -> Self {
        Query {
            id: id.into(),
            question: question.into(),
            instruction: String::new(),
            gold_answer: None,
            answer_kind: None,
        }
    }

    pub fn with_gold(mut self, gold: impl Into<String>, kind: AnswerKind) -> Self {
        self.gold_answer = Some(gold.into());
        self.answer_kind = Some(kind);
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.question.trim().is_empty() {
            return Err(format!("query {:?} has an empty question", self.id));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveConfig {
    /// Model candidates sampled per formalization round.
    pub n_candidates: usize,
    pub policy: RefinePolicy,
    /// Keep the question text out of the program-generation prompt.
    pub context_isolation: bool,
    pub limits: ExecutionLimits,
    /// Concurrent endpoint calls within one candidate group.
    pub parallelism: usize,
    pub seed: Option<u64>,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            n_candidates: 1,
            policy: RefinePolicy::default(),
            context_isolation: true,
            limits: ExecutionLimits::default(),
            parallelism: 4,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormalizeError {
    #[error(transparent)]
    Endpoint(#[from] LlmError),
    #[error("all {} model candidates failed to parse", .0.len())]
    AllCandidatesInvalid(Vec<ModelCandidate>),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenerateError {
    #[error(transparent)]
    Endpoint(#[from] LlmError),
    #[error(transparent)]
    Extract(#[from] ExtractError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error(transparent)]
    Endpoint(#[from] LlmError),
    #[error("invalid query: {0}")]
    InvalidQuery(String),
}

fn parse_candidate(round: usize, index: usize, raw: String) -> ModelCandidate {
    let (model, violations) = match parse_model(extract_model_document(&raw)) {
        Ok(m) => (Some(m), Vec::new()),
        Err(v) => (None, v),
    };
    ModelCandidate {
        round,
        index,
        raw,
        model,
        violations,
    }
}

/// Samples `n` model candidates in one round and parses each. Entries come
/// back in sampling order.
pub fn formalize(
    query: &Query,
    ogf: &dyn ChatClient,
    n: usize,
    feedback: Option<&str>,
    round: usize,
    cfg: &SolveConfig,
) -> Result<Vec<ModelCandidate>, FormalizeError> {
    assert!(n >= 1, "formalize needs at least one candidate");
    let prompt = prompts::ogf_prompt(&query.question, &query.instruction, feedback);
    let first_draw = (round * n) as u64;
    let raws = sample_n(ogf, &[ChatMessage::user(prompt)], n, first_draw, cfg.seed, cfg.parallelism)?;
    let candidates: Vec<ModelCandidate> = raws
        .into_iter()
        .enumerate()
        .map(|(i, raw)| parse_candidate(round, i, raw))
        .collect();
    if candidates.iter().all(|c| c.model.is_none()) {
        return Err(FormalizeError::AllCandidatesInvalid(candidates));
    }
    Ok(candidates)
}

/// Asks the logic-generation endpoint for a plan and program for `model`.
pub fn generate_logic(
    model: &FormalModel,
    lg: &dyn ChatClient,
    question_context: Option<&str>,
    feedback: Option<&str>,
    draw: u64,
    seed: Option<u64>,
) -> Result<(String, String), GenerateError> {
    let prompt = prompts::lg_prompt(&model.to_document(), question_context, feedback);
    let req = ChatRequest::new(vec![ChatMessage::user(prompt)])
        .with_draw(draw)
        .with_seed(seed.map(|s| s.wrapping_add(draw)));
    let completion = lg.complete(&req)?;
    Ok(extract_program(&completion)?)
}

fn word_count(s: &str) -> usize {
    s.split_whitespace().count()
}

/// Runs the full pipeline for one query. Endpoint failures abort with an
/// error; everything else, including an exhausted refinement budget, yields
/// a trace.
pub fn solve(
    query: &Query,
    ogf: &dyn ChatClient,
    lg: &dyn ChatClient,
    executor: &dyn Executor,
    cfg: &SolveConfig,
) -> Result<ReasoningTrace, SolveError> {
    query.validate().map_err(SolveError::InvalidQuery)?;
    let start = Instant::now();
    let mut trace = ReasoningTrace {
        trace_id: query.id.clone(),
        prompt_version: prompts::PROMPT_VERSION.to_string(),
        query: query.clone(),
        model_candidates: Vec::new(),
        chosen_model: None,
        logic_plan: String::new(),
        program: String::new(),
        execution: None,
        final_answer: None,
        refinement_steps: Vec::new(),
        token_counts: TokenCounts::default(),
        outcome: Outcome::Solved,
        elapsed_s: 0.0,
    };
    let question_context = (!cfg.context_isolation).then_some(query.question.as_str());
    let mut model: Option<FormalModel> = None;
    let mut ogf_feedback: Option<String> = None;
    let mut lg_feedback: Option<String> = None;
    let mut round = 0;
    let mut lg_draw = 0;

    loop {
        let failure = 'attempt: {
            if model.is_none() {
                let n = cfg.n_candidates.max(1);
                let candidates = match formalize(query, ogf, n, ogf_feedback.as_deref(), round, cfg) {
                    Ok(c) => c,
                    Err(FormalizeError::Endpoint(e)) => return Err(e.into()),
                    Err(FormalizeError::AllCandidatesInvalid(c)) => c,
                };
                round += 1;
                // first valid candidate in sampling order wins
                let chosen = candidates.iter().find(|c| c.model.is_some()).cloned();
                let diagnostic = candidates
                    .first()
                    .map(|c| describe_violations(&c.violations))
                    .unwrap_or_default();
                trace.model_candidates.extend(candidates);
                match chosen {
                    Some(c) => {
                        trace.token_counts.model = word_count(extract_model_document(&c.raw));
                        model = c.model;
                        trace.chosen_model = model.clone();
                    }
                    None => {
                        break 'attempt Failure {
                            kind: FailureKind::InvalidModel,
                            diagnostic,
                        }
                    }
                }
            }
            let m = model.as_ref().expect("model chosen above");
            let generated = generate_logic(m, lg, question_context, lg_feedback.as_deref(), lg_draw, cfg.seed);
            lg_draw += 1;
            let (plan, program) = match generated {
                Ok(pair) => pair,
                Err(GenerateError::Endpoint(e)) => return Err(e.into()),
                Err(GenerateError::Extract(e)) => {
                    break 'attempt Failure {
                        kind: FailureKind::NoCodeBlock,
                        diagnostic: e.to_string(),
                    }
                }
            };
            trace.token_counts.plan = word_count(&plan);
            trace.token_counts.program = word_count(&program);
            trace.logic_plan = plan;
            let result = execute(&program, &cfg.limits, executor);
            trace.program = program;
            trace.execution = Some(result.clone());
            if let Some(raw) = result.answer.as_deref().filter(|_| result.is_ok()) {
                let answer = normalize_answer(raw, query.answer_kind)
                    .map(|a| a.render())
                    .unwrap_or_else(|_| raw.trim().to_string());
                trace.final_answer = Some(answer);
                trace.outcome = Outcome::Solved;
                trace.elapsed_s = start.elapsed().as_secs_f64();
                return Ok(trace);
            }
            Failure {
                kind: FailureKind::Execution(result.status),
                diagnostic: result.diagnostic(),
            }
        };

        match decide_refinement(&failure, &trace.refinement_steps, &cfg.policy) {
            Decision::Abort => {
                trace.outcome = Outcome::BudgetExhausted {
                    cause: failure.diagnostic,
                };
                trace.elapsed_s = start.elapsed().as_secs_f64();
                return Ok(trace);
            }
            Decision::Step(step) => {
                match step.kind {
                    RefinementKind::RegenerateProgram => lg_feedback = Some(step.cause.clone()),
                    RefinementKind::FeedbackToOGF => {
                        ogf_feedback = Some(step.cause.clone());
                        lg_feedback = None;
                        model = None;
                    }
                }
                trace.refinement_steps.push(step);
            }
        }
    }
}
