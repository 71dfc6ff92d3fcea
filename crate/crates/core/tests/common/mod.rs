//! Fixtures shared by integration tests.
#![allow(dead_code)]

use std::collections::HashMap;

use lang2logic::executor::AnswerKind;
use lang2logic::llm::ScriptedClient;
use lang2logic::orchestrator::Query;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn model_doc(overview: &str) -> String {
    format!(
        "## OVERVIEW\n{overview}\n## TYPE\narithmetic\n## VARIABLES\n- x: integer\n## CONSTRAINTS\n- x >= 0\n## OBJECTIVES\n- compute: calculate `x`\n"
    )
}

pub fn teacher_completion(think: &str, model: &str, code: &str) -> String {
    format!("<think>{think}</think>\n<model>\n{model}</model>\n<code>\n```python\n{code}\n```\n</code>")
}

/// How a synthetic candidate was built; the oracle reads this directly
/// instead of executing anything.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Plant {
    Correct,
    WrongValue,
    RuntimeError,
    NoCode,
    BadModel,
}

#[derive(Debug, Clone)]
pub struct SynthQuestion {
    pub query: Query,
    pub gold: i64,
    pub completions: Vec<String>,
    pub plants: Vec<Plant>,
    pub code_lens: Vec<usize>,
    /// Judge score per candidate; `None` means the judge reply is garbage.
    pub scores: Vec<Option<u8>>,
}

pub fn synthetic_corpus(seed: u64, questions: usize, per_question: usize) -> Vec<SynthQuestion> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..questions)
        .map(|qi| {
            let gold: i64 = rng.gen_range(-500..500);
            let mut completions = Vec::new();
            let mut plants = Vec::new();
            let mut code_lens = Vec::new();
            let mut scores = Vec::new();
            for ci in 0..per_question {
                let plant = match rng.gen_range(0..10) {
                    0..=4 => Plant::Correct,
                    5 | 6 => Plant::WrongValue,
                    7 => Plant::RuntimeError,
                    8 => Plant::NoCode,
                    _ => Plant::BadModel,
                };
                let pad = " ".repeat(rng.gen_range(0..4));
                let code = match plant {
                    Plant::Correct | Plant::BadModel => {
                        let k: i64 = rng.gen_range(1..20);
                        format!("x = {} + {}{pad}\nanswer = x", gold - k, k)
                    }
                    Plant::WrongValue => format!("x = {}{pad}\nanswer = x", gold + rng.gen_range(1..50)),
                    Plant::RuntimeError => format!("answer = undefined_{ci}{pad}"),
                    Plant::NoCode => String::new(),
                };
                let model = if plant == Plant::BadModel {
                    "## OVERVIEW\nmissing everything else\n".to_string()
                } else {
                    model_doc(&format!("Question {qi} candidate {ci}."))
                };
                let completion = if plant == Plant::NoCode {
                    format!("<think>gave up {ci}</think><model>\n{model}</model>")
                } else {
                    teacher_completion(&format!("reasoning {qi}.{ci}"), &model, &code)
                };
                code_lens.push(code.len());
                completions.push(completion);
                plants.push(plant);
                scores.push(if rng.gen_bool(0.1) { None } else { Some(rng.gen_range(1..=10)) });
            }
            SynthQuestion {
                query: Query::new(format!("syn-{qi}"), format!("Synthetic question {qi}: what is the value?"))
                    .with_gold(gold.to_string(), AnswerKind::Number),
                gold,
                completions,
                plants,
                code_lens,
                scores,
            }
        })
        .collect()
}

fn question_index(prompt: &str) -> usize {
    let tail = prompt.split("Synthetic question ").nth(1).expect("synthetic prompt");
    tail.split(':').next().unwrap().parse().unwrap()
}

/// Teacher answering draw `d` of question `q` with its `d`-th completion.
pub fn synthetic_teacher(corpus: &[SynthQuestion]) -> ScriptedClient {
    let table: HashMap<usize, Vec<String>> =
        corpus.iter().enumerate().map(|(i, q)| (i, q.completions.clone())).collect();
    ScriptedClient::from_fn(move |call| Ok(table[&question_index(call.prompt())][call.draw as usize].clone()))
}

/// Judge replying with the planted score for (question, candidate index).
pub fn synthetic_judge(corpus: &[SynthQuestion]) -> ScriptedClient {
    let table: HashMap<usize, Vec<Option<u8>>> =
        corpus.iter().enumerate().map(|(i, q)| (i, q.scores.clone())).collect();
    ScriptedClient::from_fn(move |call| {
        Ok(match table[&question_index(call.prompt())][call.draw as usize] {
            Some(s) => format!("<score>{s}</score>"),
            None => "I refuse to score this.".to_string(),
        })
    })
}

/// Independent expectation for one question: indices surviving the
/// execution filter and the model check, then the kept indices in order.
pub fn oracle_selection(q: &SynthQuestion, k: usize) -> (Vec<usize>, Vec<usize>) {
    let exec_valid: Vec<usize> = (0..q.plants.len())
        .filter(|&i| matches!(q.plants[i], Plant::Correct | Plant::BadModel))
        .collect();
    let pool: Vec<usize> = exec_valid.iter().copied().filter(|&i| q.plants[i] == Plant::Correct).collect();
    let parsed: Vec<f64> = pool.iter().filter_map(|&i| q.scores[i].map(f64::from)).collect();
    let fallback = if parsed.is_empty() {
        5.0
    } else {
        let mut s = parsed.clone();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = s.len();
        if n % 2 == 1 { s[n / 2] } else { (s[n / 2 - 1] + s[n / 2]) / 2.0 }
    };
    let mut ranked: Vec<(f64, usize, usize)> = pool
        .iter()
        .map(|&i| (q.scores[i].map(f64::from).unwrap_or(fallback), q.code_lens[i], i))
        .collect();
    // brute force: repeatedly pick the best remaining candidate
    let mut kept = Vec::new();
    while kept.len() < k.min(pool.len()) {
        let best = (0..ranked.len())
            .reduce(|a, b| {
                let (x, y) = (ranked[a], ranked[b]);
                let better = y.0 > x.0 || (y.0 == x.0 && (y.1 < x.1 || (y.1 == x.1 && y.2 < x.2)));
                if better { b } else { a }
            })
            .unwrap();
        kept.push(ranked.remove(best).2);
    }
    (exec_valid, kept)
}

/// Operands and operator of toy task `i`.
pub fn toy_spec(i: usize) -> (i64, i64, char) {
    let ops = ['+', '-', '*'];
    (3 + 7 * i as i64, 2 + 5 * i as i64, ops[i % 3])
}

pub fn toy_gold(i: usize) -> i64 {
    match toy_spec(i) {
        (a, b, '+') => a + b,
        (a, b, '-') => a - b,
        (a, b, _) => a * b,
    }
}

/// `n` arithmetic tasks phrased as "Toy task i: compute A op B."
pub fn toy_tasks(n: usize) -> Vec<Query> {
    (0..n)
        .map(|i| {
            let (a, b, op) = toy_spec(i);
            let mut q = Query::new(format!("toy-{i}"), format!("Toy task {i}: compute {a} {op} {b}."))
                .with_gold(toy_gold(i).to_string(), AnswerKind::Number);
            q.instruction = "Give the number.".into();
            q
        })
        .collect()
}

pub fn toy_index(prompt: &str) -> usize {
    let tail = prompt.split("Toy task ").nth(1).expect("toy prompt");
    tail.split(':').next().unwrap().parse().unwrap()
}

pub fn toy_model(i: usize) -> String {
    let (a, b, op) = toy_spec(i);
    format!(
        "<model>\n## OVERVIEW\nCombine two integers.\n## TYPE\narithmetic\n## VARIABLES\n- a: integer\n- b: integer\n## CONSTRAINTS\n- a == {a}\n- b == {b}\n## OBJECTIVES\n- result: calculate `a` {op} `b`\n</model>"
    )
}

/// Formalizer that reads the task index from the question.
pub fn toy_ogf() -> ScriptedClient {
    ScriptedClient::from_fn(|call| Ok(toy_model(toy_index(call.prompt()))))
}

/// Program generator that only sees the model document: it reads the two
/// equality constraints and the objective operator back out of it.
pub fn toy_lg() -> ScriptedClient {
    ScriptedClient::from_fn(|call| {
        let p = call.prompt();
        let value = |name: &str| -> String {
            let marker = format!("- {name} == ");
            let at = p.find(&marker).expect("constraint present") + marker.len();
            p[at..].lines().next().unwrap().trim().to_string()
        };
        let obj = p.split("calculate `a` ").nth(1).expect("objective present");
        let op = obj.chars().next().unwrap();
        Ok(format!(
            "Bind both values, then apply the objective.\n```python\na = {}\nb = {}\nanswer = a {op} b\n```\n",
            value("a"),
            value("b")
        ))
    })
}

/// Baseline endpoint answering task `i` correctly iff `solves(i)`; replies
/// in program form for program prompts and answer-line form otherwise.
pub fn toy_baseline(solves: impl Fn(usize) -> bool + Send + Sync + 'static) -> ScriptedClient {
    ScriptedClient::from_fn(move |call| {
        let p = call.prompt();
        let i = toy_index(p);
        let value = if solves(i) { toy_gold(i) } else { toy_gold(i) + 1 };
        Ok(if p.contains("Python program") {
            format!("```python\nanswer = {value}\n```")
        } else {
            format!("Working it out.\nAnswer: {value}")
        })
    })
}
