//! Rejection-sampling dataset construction: sample tagged teacher
//! completions, keep those whose program executes to the gold answer, rank
//! survivors with a judge, retain the top `min(K, I)`, and export JSON lines.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::executor::{execute, normalize_answer, AnswerKind, CanonicalAnswer, ExecutionLimits, ExecutionResult, Executor};
use crate::llm::{sample_n, ChatClient, ChatMessage, ChatRequest, LlmError};
use crate::model::{parse_model, FormalModel};
use crate::orchestrator::extract::extract_program;
use crate::orchestrator::prompts::{render, JUDGE_TEMPLATE, PROMPT_VERSION, TEACHER_TEMPLATE};
use crate::orchestrator::Query;
use crate::par::parallel_map;
use crate::reward::answer_correct;

/// Judge score used when no judgment in a group parses.
pub const NEUTRAL_SCORE: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateTriple {
    pub index: usize,
    pub think: String,
    pub model_doc: String,
    pub code: String,
    pub exec_result: Option<ExecutionResult>,
    pub rank_score: Option<f64>,
}

impl CandidateTriple {
    pub fn from_completion(index: usize, completion: &str) -> Self {
        let (think, model_doc, code) = split_triple(completion);
        CandidateTriple {
            index,
            think,
            model_doc,
            code,
            exec_result: None,
            rank_score: None,
        }
    }
}

/// One supervised record. `id` and the answer kind are bookkeeping and are
/// not exported.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSample {
    #[serde(skip)]
    pub id: String,
    pub q: String,
    pub a: String,
    pub s: String,
    pub m: String,
    pub p: String,
    #[serde(skip)]
    pub answer_kind: Option<AnswerKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub count: usize,
    pub source_corpus_id: String,
    pub config_hash: String,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetConfig {
    /// Teacher samples per question.
    pub n: usize,
    /// Samples retained per question.
    pub k: usize,
    pub limits: ExecutionLimits,
    pub parallelism: usize,
    pub seed: Option<u64>,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            n: 8,
            k: 2,
            limits: ExecutionLimits::default(),
            parallelism: 4,
            seed: None,
        }
    }
}

impl DatasetConfig {
    pub fn hash(&self) -> String {
        let body = serde_json::json!({ "config": self, "prompts": PROMPT_VERSION });
        hex::encode(Sha256::digest(body.to_string()))
    }
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error(transparent)]
    Endpoint(#[from] LlmError),
    #[error("invalid corpus: {0}")]
    InvalidCorpus(String),
    #[error("sample {0} no longer executes to its answer")]
    VerificationFailed(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

fn tagged<'a>(text: &'a str, tag: &str) -> Option<&'a str> {
    let open = format!("<{tag}>");
    let close = format!("</{tag}>");
    let start = text.find(&open)? + open.len();
    let len = text[start..].find(&close)?;
    Some(text[start..start + len].trim())
}

/// Splits a teacher completion on `<think>`, `<model>` and `<code>` tags.
/// Missing sections come back empty; a fenced block inside `<code>` is
/// unwrapped.
pub fn split_triple(completion: &str) -> (String, String, String) {
    let think = tagged(completion, "think").unwrap_or("").to_string();
    let model = tagged(completion, "model").unwrap_or("").to_string();
    let code = tagged(completion, "code")
        .map(|c| match extract_program(c) {
            Ok((_, program)) => program,
            Err(_) => c.to_string(),
        })
        .unwrap_or_default();
    (think, model, code)
}

pub fn teacher_prompt(query: &Query) -> String {
    render(
        TEACHER_TEMPLATE,
        &[("question", &query.question), ("instruction", &query.instruction)],
    )
}

/// Draws `n` teacher completions and splits each into a triple, in order.
pub fn sample_candidates(
    query: &Query,
    teacher: &dyn ChatClient,
    n: usize,
    cfg: &DatasetConfig,
) -> Result<Vec<CandidateTriple>, DatasetError> {
    if query.gold_answer.is_none() {
        return Err(DatasetError::InvalidCorpus(format!("query {} has no gold answer", query.id)));
    }
    let msgs = [ChatMessage::user(teacher_prompt(query))];
    let raws = sample_n(teacher, &msgs, n, 0, cfg.seed, cfg.parallelism)?;
    Ok(raws
        .iter()
        .enumerate()
        .map(|(i, raw)| CandidateTriple::from_completion(i, raw))
        .collect())
}

/// Runs every candidate, attaches its result, and returns those whose
/// answer matches `gold`.
pub fn filter_by_execution(
    candidates: &mut [CandidateTriple],
    gold: &CanonicalAnswer,
    limits: &ExecutionLimits,
    executor: &dyn Executor,
    parallelism: usize,
) -> Vec<CandidateTriple> {
    let results = parallel_map(candidates, parallelism, |_, c| execute(&c.code, limits, executor));
    for (c, r) in candidates.iter_mut().zip(results) {
        c.exec_result = Some(r);
    }
    candidates
        .iter()
        .filter(|c| c.exec_result.as_ref().is_some_and(|r| answer_correct(r, gold)))
        .cloned()
        .collect()
}

/// Reads an integer 1..=10 from a `<score>` tag.
pub fn parse_judge_score(text: &str) -> Option<u8> {
    let inner = tagged(text, "score")?;
    let v: u8 = inner.parse().ok()?;
    (1..=10).contains(&v).then_some(v)
}

fn median(xs: &mut [f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    xs.sort_by(f64::total_cmp);
    let mid = xs.len() / 2;
    Some(if xs.len() % 2 == 1 { xs[mid] } else { (xs[mid - 1] + xs[mid]) / 2.0 })
}

pub fn judge_prompt(question: &str, c: &CandidateTriple) -> String {
    render(
        JUDGE_TEMPLATE,
        &[
            ("question", question),
            ("think", &c.think),
            ("model_document", &c.model_doc),
            ("program", &c.code),
        ],
    )
}

/// Order used for retention: score desc, code length asc, index asc.
pub fn rank_order(a: &CandidateTriple, b: &CandidateTriple) -> std::cmp::Ordering {
    let (sa, sb) = (a.rank_score.unwrap_or(f64::NEG_INFINITY), b.rank_score.unwrap_or(f64::NEG_INFINITY));
    sb.total_cmp(&sa)
        .then(a.code.len().cmp(&b.code.len()))
        .then(a.index.cmp(&b.index))
}

/// Scores each candidate independently with the judge and keeps the best
/// `min(k, valid.len())`. Unparseable judgments get the median of the parsed
/// scores in the group. Returns the kept candidates and the number of
/// judgments that needed the fallback.
pub fn rank_by_self_evaluation(
    mut valid: Vec<CandidateTriple>,
    question: &str,
    judge: &dyn ChatClient,
    k: usize,
    cfg: &DatasetConfig,
) -> Result<(Vec<CandidateTriple>, usize), DatasetError> {
    if valid.is_empty() || k == 0 {
        return Ok((Vec::new(), 0));
    }
    let replies: Vec<Result<String, LlmError>> = parallel_map(&valid, cfg.parallelism, |_, c| {
        let req = ChatRequest::new(vec![ChatMessage::user(judge_prompt(question, c))])
            .with_draw(c.index as u64)
            .with_seed(cfg.seed);
        judge.complete(&req)
    });
    let mut scores = Vec::with_capacity(replies.len());
    for r in replies {
        scores.push(parse_judge_score(&r?).map(f64::from));
    }
    let mut parsed: Vec<f64> = scores.iter().flatten().copied().collect();
    let fallback = median(&mut parsed).unwrap_or(NEUTRAL_SCORE);
    let fallbacks = scores.iter().filter(|s| s.is_none()).count();
    for (c, s) in valid.iter_mut().zip(scores) {
        c.rank_score = Some(s.unwrap_or(fallback));
    }
    valid.sort_by(rank_order);
    valid.truncate(k);
    Ok((valid, fallbacks))
}

fn gold_of(query: &Query) -> Result<CanonicalAnswer, DatasetError> {
    let raw = query
        .gold_answer
        .as_deref()
        .ok_or_else(|| DatasetError::InvalidCorpus(format!("query {} has no gold answer", query.id)))?;
    normalize_answer(raw, query.answer_kind)
        .map_err(|e| DatasetError::InvalidCorpus(format!("query {}: {e}", query.id)))
}

/// Result of running the pipeline on one question.
#[derive(Debug, Clone)]
pub struct QueryOutcome {
    pub candidates: Vec<CandidateTriple>,
    pub samples: Vec<DatasetSample>,
    pub warnings: Vec<String>,
}

/// Full per-question pipeline. Execution-valid candidates whose model
/// document does not parse are dropped before ranking, since every exported
/// sample must carry a clean model.
pub fn process_query(
    query: &Query,
    teacher: &dyn ChatClient,
    judge: &dyn ChatClient,
    executor: &dyn Executor,
    cfg: &DatasetConfig,
) -> Result<QueryOutcome, DatasetError> {
    let gold = gold_of(query)?;
    let mut candidates = sample_candidates(query, teacher, cfg.n, cfg)?;
    let valid = filter_by_execution(&mut candidates, &gold, &cfg.limits, executor, cfg.parallelism);
    let mut warnings = Vec::new();
    let mut parsed: Vec<(CandidateTriple, FormalModel)> = Vec::new();
    for c in valid {
        match parse_model(&c.model_doc) {
            Ok(m) => parsed.push((c, m)),
            Err(_) => warnings.push(format!("{}#{}: model does not parse; dropped", query.id, c.index)),
        }
    }
    let models: Vec<FormalModel> = parsed.iter().map(|(_, m)| m.clone()).collect();
    let pool: Vec<CandidateTriple> = parsed.into_iter().map(|(c, _)| c).collect();
    let indices: Vec<usize> = pool.iter().map(|c| c.index).collect();
    let (kept, fallbacks) = rank_by_self_evaluation(pool, &query.question, judge, cfg.k, cfg)?;
    if fallbacks > 0 {
        warnings.push(format!("{}: {fallbacks} judge replies unparseable; median fallback used", query.id));
    }
    let samples = kept
        .iter()
        .map(|c| {
            let m = &models[indices.iter().position(|&i| i == c.index).expect("kept came from pool")];
            DatasetSample {
                id: format!("{}#{}", query.id, c.index),
                q: query.question.clone(),
                a: gold.render(),
                s: c.think.clone(),
                m: m.to_document(),
                p: c.code.clone(),
                answer_kind: Some(gold.kind()),
            }
        })
        .collect();
    for c in candidates.iter_mut() {
        if let Some(k) = kept.iter().find(|k| k.index == c.index) {
            c.rank_score = k.rank_score;
        }
    }
    Ok(QueryOutcome {
        candidates,
        samples,
        warnings,
    })
}

/// Checks the export invariants for one sample: the model parses and the
/// program executes to the answer.
pub fn verify_sample(sample: &DatasetSample, executor: &dyn Executor, limits: &ExecutionLimits) -> bool {
    if parse_model(&sample.m).is_err() {
        return false;
    }
    let Ok(gold) = normalize_answer(&sample.a, sample.answer_kind) else {
        return false;
    };
    answer_correct(&execute(&sample.p, limits, executor), &gold)
}

/// Path of the manifest written next to a dataset file.
pub fn manifest_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    path.with_file_name(name)
}

/// Re-verifies every sample, then writes one JSON object per line plus a
/// manifest. Nothing is written if any sample fails.
pub fn export_sft(
    samples: &[DatasetSample],
    path: &Path,
    executor: &dyn Executor,
    limits: &ExecutionLimits,
    source_corpus_id: &str,
    config_hash: &str,
    warnings: Vec<String>,
) -> Result<Manifest, DatasetError> {
    for s in samples {
        if !verify_sample(s, executor, limits) {
            return Err(DatasetError::VerificationFailed(s.id.clone()));
        }
    }
    let mut out = Vec::new();
    for s in samples {
        serde_json::to_writer(&mut out, s).expect("sample serializes");
        out.push(b'\n');
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, &out)?;
    let manifest = Manifest {
        count: samples.len(),
        source_corpus_id: source_corpus_id.to_string(),
        config_hash: config_hash.to_string(),
        warnings,
    };
    let mut f = fs::File::create(manifest_path(path))?;
    serde_json::to_writer_pretty(&mut f, &manifest).expect("manifest serializes");
    f.write_all(b"\n")?;
    Ok(manifest)
}

/// Identity of a seed corpus: sha256 over its queries in order.
pub fn corpus_id(corpus: &[Query]) -> String {
    let mut h = Sha256::new();
    for q in corpus {
        h.update(serde_json::to_vec(q).expect("query serializes"));
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

/// Runs the pipeline over a corpus and exports the result to `out`.
pub fn build_dataset(
    corpus: &[Query],
    teacher: &dyn ChatClient,
    judge: &dyn ChatClient,
    executor: &dyn Executor,
    cfg: &DatasetConfig,
    out: &Path,
) -> Result<Manifest, DatasetError> {
    for q in corpus {
        q.validate().map_err(DatasetError::InvalidCorpus)?;
        gold_of(q)?;
    }
    let mut warnings = Vec::new();
    if cfg.k == 0 {
        warnings.push("K = 0: no samples are retained, dataset is empty".to_string());
    }
    let outcomes = parallel_map(corpus, cfg.parallelism, |_, q| process_query(q, teacher, judge, executor, cfg));
    let mut samples = Vec::new();
    for o in outcomes {
        let o = o?;
        warnings.extend(o.warnings);
        samples.extend(o.samples);
    }
    export_sft(&samples, out, executor, &cfg.limits, &corpus_id(corpus), &cfg.hash(), warnings)
}
