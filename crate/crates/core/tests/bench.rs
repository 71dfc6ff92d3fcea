mod common;

use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use common::{toy_baseline, toy_index, toy_lg, toy_ogf, toy_tasks};
use lang2logic::bench::toy::{train_toy, ToyConfig, ToyError, DEFAULT_TOY_CONFIG};
use lang2logic::bench::{
    parse_task_file, persist_report, run_bench, BenchConfig, BenchEndpoints, BenchReport, Method,
};
use lang2logic::executor::{Executor, MiniInterpreter};
use lang2logic::llm::{CachedClient, ChatClient, LlmError, ScriptedClient};
use lang2logic::orchestrator::{find_trace, render_trace, TraceLog, TraceLookupError};

fn mini() -> Arc<dyn Executor> {
    Arc::new(MiniInterpreter)
}

fn endpoints(ogf: ScriptedClient, lg: ScriptedClient, baseline: ScriptedClient) -> BenchEndpoints {
    BenchEndpoints {
        ogf: Arc::new(ogf),
        lg: Arc::new(lg),
        baseline: Arc::new(baseline),
    }
}

/// Formalizer that breaks task 3 by never producing a valid model.
fn ogf_failing_on(bad: usize) -> ScriptedClient {
    let good = toy_ogf();
    ScriptedClient::from_fn(move |call| {
        if toy_index(call.prompt()) == bad {
            Ok("no model here".into())
        } else {
            good.complete(&lang2logic::llm::ChatRequest::new(call.messages.clone()))
        }
    })
}

#[test]
fn three_of_four_solved_gives_three_quarters() {
    let tasks = toy_tasks(4);
    let eps = endpoints(ogf_failing_on(3), toy_lg(), toy_baseline(|i| i < 2));
    let report = run_bench(&tasks, &[Method::Lang2logic, Method::Pal, Method::Cot], &eps, mini(), &BenchConfig::default(), None)
        .unwrap();
    let ours = report.summary(Method::Lang2logic).unwrap();
    assert_eq!(ours.accuracy(), (3, 4));
    assert!((ours.accuracy_pct - 75.0).abs() < 1e-12);
    assert_eq!(report.summary(Method::Pal).unwrap().accuracy(), (2, 4));
    assert_eq!(report.summary(Method::Cot).unwrap().accuracy(), (2, 4));
    // every item attempted once per method
    assert_eq!(report.items.len(), 12);
    let gain = report.relative_gain.as_ref().unwrap();
    assert_eq!(gain.baseline, Method::Pal);
    assert_eq!(gain.rendered, "+50.0%");
    let failed = report.items.iter().find(|i| i.method == Method::Lang2logic && i.id == "toy-3").unwrap();
    assert!(!failed.correct);
    assert!(failed.error.as_deref().unwrap().contains("budget exhausted"));
}

#[test]
fn endpoint_errors_stay_per_item() {
    let tasks = toy_tasks(3);
    let flaky = ScriptedClient::from_fn(|call| {
        if toy_index(call.prompt()) == 1 {
            Err(LlmError::Unreachable("connection refused".into()))
        } else {
            toy_ogf().complete(&lang2logic::llm::ChatRequest::new(call.messages.clone()))
        }
    });
    let eps = endpoints(flaky, toy_lg(), toy_baseline(|_| true));
    let report = run_bench(&tasks, &[Method::Lang2logic], &eps, mini(), &BenchConfig::default(), None).unwrap();
    assert_eq!(report.summary(Method::Lang2logic).unwrap().accuracy(), (2, 3));
    let bad = report.items.iter().find(|i| i.id == "toy-1").unwrap();
    assert!(bad.error.as_deref().unwrap().contains("connection refused"));
    assert!(report.relative_gain.is_none());
}

#[test]
fn stuck_endpoint_times_out_per_item() {
    let tasks = toy_tasks(3);
    let slow = ScriptedClient::from_fn(|call| {
        if toy_index(call.prompt()) == 0 {
            std::thread::sleep(Duration::from_secs(5));
        }
        Ok(common::toy_model(toy_index(call.prompt())))
    });
    let eps = endpoints(slow, toy_lg(), toy_baseline(|_| true));
    let cfg = BenchConfig {
        item_timeout_s: 0.3,
        ..Default::default()
    };
    let start = Instant::now();
    let report = run_bench(&tasks, &[Method::Lang2logic], &eps, mini(), &cfg, None).unwrap();
    assert!(start.elapsed() < Duration::from_secs(3));
    assert_eq!(report.summary(Method::Lang2logic).unwrap().accuracy(), (2, 3));
    assert!(report.items[0].error.as_deref().unwrap().contains("timed out"));
}

#[test]
fn cached_runs_give_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let tasks = toy_tasks(6);
    let cached = |inner: ScriptedClient, sub: &str| -> Arc<dyn ChatClient> {
        Arc::new(CachedClient::new(Arc::new(inner), dir.path().join(sub)).unwrap())
    };
    let first = BenchEndpoints {
        ogf: cached(toy_ogf(), "ogf"),
        lg: cached(toy_lg(), "lg"),
        baseline: cached(toy_baseline(|i| i % 2 == 0), "base"),
    };
    let cfg = BenchConfig {
        seed: 17,
        ..Default::default()
    };
    let methods = [Method::Lang2logic, Method::Pal, Method::Cot];
    let a = run_bench(&tasks, &methods, &first, mini(), &cfg, None).unwrap();
    // second run: every upstream call would fail, so all answers come from the cache
    let dead = || ScriptedClient::from_fn(|_| Err(LlmError::Unreachable("offline".into())));
    let second = BenchEndpoints {
        ogf: cached(dead(), "ogf"),
        lg: cached(dead(), "lg"),
        baseline: cached(dead(), "base"),
    };
    let b = run_bench(&tasks, &methods, &second, mini(), &cfg, None).unwrap();
    assert_eq!(a.without_timing(), b.without_timing());
    assert_eq!(a.seed, 17);
    assert_eq!(a.config_hash, b.config_hash);
}

#[test]
fn report_and_traces_are_persisted_and_linked() {
    let dir = tempfile::tempdir().unwrap();
    let log = TraceLog::new(dir.path().join("traces.jsonl"));
    let tasks = toy_tasks(3);
    let eps = endpoints(ogf_failing_on(2), toy_lg(), toy_baseline(|_| false));
    let report = run_bench(&tasks, &[Method::Lang2logic, Method::Cot], &eps, mini(), &BenchConfig::default(), Some(&log))
        .unwrap();
    let path = persist_report(&report, dir.path()).unwrap();
    let back: BenchReport = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(back, report);
    assert!(std::fs::read_to_string(dir.path().join("report.txt")).unwrap().contains("lang2logic"));
    // zero-accuracy baseline: gain undefined, not infinite
    assert_eq!(report.relative_gain.as_ref().unwrap().gain_pct, None);

    let solved = report.items.iter().find(|i| i.id == "toy-0" && i.method == Method::Lang2logic).unwrap();
    let t = find_trace(log.path(), solved.trace_id.as_deref().unwrap()).unwrap();
    let text = render_trace(&t);
    for section in ["OVERVIEW", "TYPE", "VARIABLES", "CONSTRAINTS", "OBJECTIVES"] {
        assert!(text.contains(section), "missing {section} in\n{text}");
    }
    let aborted = find_trace(log.path(), "toy-2").unwrap();
    assert!(render_trace(&aborted).contains("BudgetExhausted") || render_trace(&aborted).contains("budget exhausted"));
    assert!(matches!(find_trace(log.path(), "toy-99"), Err(TraceLookupError::NotFound(_))));
}

#[test]
fn task_file_rejects_duplicates_and_missing_gold() {
    let ok = r#"{"id":"a","question":"1+1?","gold_answer":"2","answer_kind":"number"}"#;
    assert_eq!(parse_task_file(ok).unwrap().len(), 1);
    assert!(parse_task_file(&format!("{ok}\n{ok}")).is_err());
    assert!(parse_task_file(r#"{"id":"a","question":"1+1?","answer_kind":"number"}"#).is_err());
}

#[test]
fn shipped_toy_config_passes_and_is_reproducible() {
    let cfg = ToyConfig::parse(DEFAULT_TOY_CONFIG).unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let (summary, arts_a) = train_toy(&cfg, a.path()).unwrap();
    assert!(summary.passed, "{:?}", summary.failures);
    assert!(summary.final_expected_reward >= 0.95);
    let (_, arts_b) = train_toy(&cfg, b.path()).unwrap();
    for (x, y) in [(&arts_a.history, &arts_b.history), (&arts_a.policies, &arts_b.policies), (&arts_a.summary_json, &arts_b.summary_json)] {
        assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap());
    }
    assert_eq!(std::fs::read_to_string(&arts_a.history).unwrap().lines().count(), 200);
}

#[test]
fn zero_iterations_is_config_invalid() {
    let text = DEFAULT_TOY_CONFIG.replace("iterations = 200", "iterations = 0");
    assert!(matches!(ToyConfig::parse(&text), Err(ToyError::ConfigInvalid(_))));
}

#[test]
fn failing_thresholds_report_failure() {
    let text = DEFAULT_TOY_CONFIG.replace("iterations = 200", "iterations = 2");
    let cfg = ToyConfig::parse(&text).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (summary, _) = train_toy(&cfg, dir.path()).unwrap();
    assert!(!summary.passed);
    assert!(!summary.failures.is_empty());
}

fn l2l() -> Command {
    Command::new(env!("CARGO_BIN_EXE_l2l"))
}

#[test]
fn cli_train_toy_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = l2l().args(["train-toy", "--out"]).arg(dir.path().join("ok")).output().unwrap();
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("PASS"));

    let short = dir.path().join("short.toml");
    std::fs::write(&short, DEFAULT_TOY_CONFIG.replace("iterations = 200", "iterations = 2")).unwrap();
    let fail = l2l().arg("train-toy").arg("--config").arg(&short).arg("--out").arg(dir.path().join("f")).output().unwrap();
    assert_eq!(fail.status.code(), Some(1));

    let invalid = dir.path().join("bad.toml");
    std::fs::write(&invalid, DEFAULT_TOY_CONFIG.replace("iterations = 200", "iterations = 0")).unwrap();
    let bad = l2l().arg("train-toy").arg("--config").arg(&invalid).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("invalid config"));
}

#[test]
fn cli_inspect_trace() {
    let dir = tempfile::tempdir().unwrap();
    let log = TraceLog::new(dir.path().join("traces.jsonl"));
    let tasks = toy_tasks(1);
    let eps = endpoints(toy_ogf(), toy_lg(), toy_baseline(|_| true));
    run_bench(&tasks, &[Method::Lang2logic], &eps, mini(), &BenchConfig::default(), Some(&log)).unwrap();

    let found = l2l().args(["inspect-trace", "toy-0", "--traces"]).arg(log.path()).output().unwrap();
    assert!(found.status.success());
    assert!(String::from_utf8_lossy(&found.stdout).contains("CONSTRAINTS"));
    let missing = l2l().args(["inspect-trace", "nope", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(missing.status.code(), Some(3));
}

#[test]
fn cli_rejects_missing_endpoints() {
    let dir = tempfile::tempdir().unwrap();
    let tasks = dir.path().join("t.jsonl");
    std::fs::write(&tasks, r#"{"id":"a","question":"1+1?","gold_answer":"2","answer_kind":"number"}"#).unwrap();
    let out = l2l().arg("bench").arg("--tasks").arg(&tasks).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("endpoint"));
}
