use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use lang2logic::bench::toy::{render_summary, train_toy, ToyConfig, DEFAULT_TOY_CONFIG};
use lang2logic::bench::{load_seed_corpus, load_task_file, persist_report, render_table, run_bench, Method};
use lang2logic::config::{endpoint_from_flag, RunConfig};
use lang2logic::dataset::build_dataset;
use lang2logic::executor::AnswerKind;
use lang2logic::orchestrator::{find_trace, render_trace, solve, Query, TraceLog, TraceLookupError};

#[derive(Parser)]
#[command(name = "l2l", version, about = "Formalize-then-program reasoning toolkit")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// TOML config file. For train-toy this is the toy training config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Formalization endpoint as URL or URL#MODEL.
    #[arg(long, global = true)]
    endpoint_ogf: Option<String>,
    /// Logic-generation endpoint as URL or URL#MODEL.
    #[arg(long, global = true)]
    endpoint_lg: Option<String>,
    #[arg(long, global = true)]
    parallelism: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for cached endpoint responses.
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    /// Output file or directory, depending on the subcommand.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one question, or every item of a task file.
    Solve {
        #[arg(long, conflicts_with = "tasks")]
        question: Option<String>,
        #[arg(long, default_value = "")]
        instruction: String,
        #[arg(long, default_value = "q0")]
        id: String,
        /// number, boolean, choice-label or string.
        #[arg(long)]
        answer_kind: Option<String>,
        #[arg(long)]
        tasks: Option<PathBuf>,
        /// Print traces as JSON instead of rendered text.
        #[arg(long)]
        json: bool,
    },
    /// Run methods over a task file and write a report.
    Bench {
        #[arg(long)]
        tasks: PathBuf,
        /// Comma-separated: lang2logic, pal, cot.
        #[arg(long, default_value = "lang2logic,pal,cot")]
        methods: String,
        /// Fix the baseline for the relative gain.
        #[arg(long)]
        baseline: Option<String>,
    },
    /// Build a verified fine-tuning dataset from a seed corpus.
    BuildDataset {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Train tabular policies on a toy task; exit 0 iff thresholds are met.
    TrainToy,
    /// Render a stored reasoning trace.
    InspectTrace {
        trace_id: String,
        /// Trace log; defaults to OUT/traces.jsonl.
        #[arg(long)]
        traces: Option<PathBuf>,
    },
}

fn load_run_config(g: &GlobalArgs) -> Result<RunConfig, String> {
    let mut cfg = match &g.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(flag) = &g.endpoint_ogf {
        cfg.endpoints.ogf = Some(endpoint_from_flag(flag, cfg.endpoints.ogf.as_ref())?);
    }
    if let Some(flag) = &g.endpoint_lg {
        cfg.endpoints.lg = Some(endpoint_from_flag(flag, cfg.endpoints.lg.as_ref())?);
    }
    if let Some(n) = g.parallelism {
        if n == 0 {
            return Err("--parallelism must be at least 1".into());
        }
        cfg.set_parallelism(n);
    }
    if let Some(s) = g.seed {
        cfg.set_seed(s);
    }
    if g.cache_dir.is_some() {
        cfg.cache_dir = g.cache_dir.clone();
    }
    Ok(cfg)
}

fn out_dir(g: &GlobalArgs, default: &str) -> PathBuf {
    g.out.clone().unwrap_or_else(|| PathBuf::from(default))
}

fn parse_kind(s: &str) -> Result<AnswerKind, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| format!("unknown answer kind {s:?}"))
}

fn cmd_solve(
    g: &GlobalArgs,
    question: Option<String>,
    instruction: String,
    id: String,
    answer_kind: Option<String>,
    tasks: Option<PathBuf>,
    json: bool,
) -> Result<ExitCode, String> {
    let cfg = load_run_config(g)?;
    let queries = match (question, tasks) {
        (Some(q), None) => {
            let mut query = Query::new(id, q);
            query.instruction = instruction;
            query.answer_kind = answer_kind.as_deref().map(parse_kind).transpose()?;
            vec![query]
        }
        (None, Some(path)) => load_task_file(&path).map_err(|e| e.to_string())?,
        _ => return Err("pass either --question or --tasks".into()),
    };
    let endpoints = cfg.endpoints.bench_endpoints(cfg.cache_dir.as_deref())?;
    let executor = cfg.executor.build()?;
    let dir = out_dir(g, "l2l-out");
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let log = TraceLog::new(dir.join("traces.jsonl"));
    let mut all_solved = true;
    for q in &queries {
        let trace = solve(q, endpoints.ogf.as_ref(), endpoints.lg.as_ref(), executor.as_ref(), &cfg.bench.solve)
            .map_err(|e| format!("{}: {e}", q.id))?;
        log.append(&trace).map_err(|e| e.to_string())?;
        all_solved &= trace.is_solved();
        if json {
            print!("{}", trace.to_json_line());
        } else {
            println!("{}", render_trace(&trace));
        }
    }
    info!("traces appended to {}", log.path().display());
    Ok(if all_solved { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn cmd_bench(g: &GlobalArgs, tasks: &Path, methods: &str, baseline: Option<String>) -> Result<ExitCode, String> {
    let mut cfg = load_run_config(g)?;
    let methods: Vec<Method> = methods
        .split(',')
        .map(|m| Method::parse(m).ok_or_else(|| format!("unknown method {m:?}")))
        .collect::<Result<_, _>>()?;
    if let Some(b) = baseline {
        cfg.bench.baseline = Some(Method::parse(&b).ok_or_else(|| format!("unknown baseline {b:?}"))?);
    }
    let items = load_task_file(tasks).map_err(|e| e.to_string())?;
    let endpoints = cfg.endpoints.bench_endpoints(cfg.cache_dir.as_deref())?;
    let executor = cfg.executor.build()?;
    let dir = out_dir(g, "l2l-bench");
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let log = TraceLog::new(dir.join("traces.jsonl"));
    let report = run_bench(&items, &methods, &endpoints, executor, &cfg.bench, Some(&log)).map_err(|e| e.to_string())?;
    let path = persist_report(&report, &dir).map_err(|e| e.to_string())?;
    print!("{}", render_table(&report));
    info!("report written to {}", path.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_build_dataset(g: &GlobalArgs, corpus: &Path, n: Option<usize>, k: Option<usize>) -> Result<ExitCode, String> {
    let mut cfg = load_run_config(g)?;
    if let Some(n) = n {
        cfg.dataset.n = n;
    }
    if let Some(k) = k {
        cfg.dataset.k = k;
    }
    if cfg.dataset.n == 0 {
        return Err("n must be at least 1".into());
    }
    let queries = load_seed_corpus(corpus).map_err(|e| e.to_string())?;
    let (teacher, judge) = cfg.endpoints.teacher_and_judge(cfg.cache_dir.as_deref())?;
    let executor = cfg.executor.build()?;
    let out = g.out.clone().unwrap_or_else(|| PathBuf::from("dataset.jsonl"));
    let manifest = build_dataset(&queries, teacher.as_ref(), judge.as_ref(), executor.as_ref(), &cfg.dataset, &out)
        .map_err(|e| e.to_string())?;
    for w in &manifest.warnings {
        log::warn!("{w}");
    }
    println!("{}", serde_json::to_string_pretty(&manifest).expect("manifest serializes"));
    Ok(ExitCode::SUCCESS)
}

fn cmd_train_toy(g: &GlobalArgs) -> Result<ExitCode, String> {
    let mut cfg = match &g.config {
        Some(p) => ToyConfig::load(p),
        None => ToyConfig::parse(DEFAULT_TOY_CONFIG),
    }
    .map_err(|e| e.to_string())?;
    if let Some(s) = g.seed {
        cfg.train.seed = s;
    }
    let dir = out_dir(g, "l2l-toy");
    let (summary, arts) = train_toy(&cfg, &dir).map_err(|e| e.to_string())?;
    print!("{}", render_summary(&summary));
    info!("history written to {}", arts.history.display());
    Ok(if summary.passed { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn cmd_inspect(g: &GlobalArgs, trace_id: &str, traces: Option<PathBuf>) -> Result<ExitCode, String> {
    let path = traces.unwrap_or_else(|| out_dir(g, "l2l-out").join("traces.jsonl"));
    match find_trace(&path, trace_id) {
        Ok(t) => {
            println!("{}", render_trace(&t));
            Ok(ExitCode::SUCCESS)
        }
        Err(e @ TraceLookupError::NotFound(_)) => {
            eprintln!("error: {e}");
            Ok(ExitCode::from(3))
        }
        Err(e) => Err(e.to_string()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let g = &cli.global;
    let result = match cli.command {
        Command::Solve {
            question,
            instruction,
            id,
            answer_kind,
            tasks,
            json,
        } => cmd_solve(g, question, instruction, id, answer_kind, tasks, json),
        Command::Bench { tasks, methods, baseline } => cmd_bench(g, &tasks, &methods, baseline),
        Command::BuildDataset { corpus, n, k } => cmd_build_dataset(g, &corpus, n, k),
        Command::TrainToy => cmd_train_toy(g),
        Command::InspectTrace { trace_id, traces } => cmd_inspect(g, &trace_id, traces),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
