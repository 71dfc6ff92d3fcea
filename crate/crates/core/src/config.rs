//! Run configuration shared by the CLI subcommands.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bench::{BenchConfig, BenchEndpoints};
use crate::dataset::DatasetConfig;
use crate::executor::{Executor, MiniInterpreter, SubprocessExecutor};
use crate::llm::{CachedClient, ChatClient, ChatEndpoint, HttpClient};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EndpointsConfig {
    pub ogf: Option<ChatEndpoint>,
    pub lg: Option<ChatEndpoint>,
    /// Used by the pal and cot methods; falls back to `lg`.
    pub baseline: Option<ChatEndpoint>,
    /// Falls back to `ogf`.
    pub teacher: Option<ChatEndpoint>,
    /// Falls back to `teacher`.
    pub judge: Option<ChatEndpoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ExecutorConfig {
    /// Built-in interpreter, no external process.
    Mini,
    /// External runner speaking the JSON-line protocol on stdin/stdout.
    Subprocess { command: Vec<String> },
}

impl Default for ExecutorConfig {
    fn default() -> Self {
        ExecutorConfig::Mini
    }
}

impl ExecutorConfig {
    pub fn build(&self) -> Result<Arc<dyn Executor>, String> {
        match self {
            ExecutorConfig::Mini => Ok(Arc::new(MiniInterpreter)),
            ExecutorConfig::Subprocess { command } if command.is_empty() => {
                Err("subprocess executor needs a command".into())
            }
            ExecutorConfig::Subprocess { command } => Ok(Arc::new(SubprocessExecutor::new(command.clone()))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub endpoints: EndpointsConfig,
    pub executor: ExecutorConfig,
    pub bench: BenchConfig,
    pub dataset: DatasetConfig,
    pub cache_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn load(path: &Path) -> Result<RunConfig, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        RunConfig::parse(&text)
    }

    /// Applies a run seed everywhere randomness is drawn.
    pub fn set_seed(&mut self, seed: u64) {
        self.bench.seed = seed;
        self.bench.solve.seed = Some(seed);
        self.dataset.seed = Some(seed);
    }

    pub fn set_parallelism(&mut self, n: usize) {
        self.bench.parallelism = n;
        self.bench.solve.parallelism = n;
        self.dataset.parallelism = n;
    }
}

/// Parses `URL` or `URL#MODEL`. A bare URL keeps `fallback`'s other
/// settings and model name.
pub fn endpoint_from_flag(flag: &str, fallback: Option<&ChatEndpoint>) -> Result<ChatEndpoint, String> {
    let (url, model) = match flag.rsplit_once('#') {
        Some((u, m)) if !m.is_empty() => (u, Some(m)),
        _ => (flag, None),
    };
    let mut ep = fallback.cloned().unwrap_or_else(|| ChatEndpoint::new(url, "default"));
    ep.base_url = url.to_string();
    if let Some(m) = model {
        ep.model_name = m.to_string();
    }
    ep.validate()?;
    Ok(ep)
}

/// HTTP client for `endpoint`, behind the response cache when `cache_dir`
/// is set.
pub fn build_client(endpoint: &ChatEndpoint, cache_dir: Option<&Path>) -> Result<Arc<dyn ChatClient>, String> {
    endpoint.validate()?;
    let http: Arc<dyn ChatClient> = Arc::new(HttpClient::new(endpoint.clone()).map_err(|e| e.to_string())?);
    match cache_dir {
        Some(dir) => Ok(Arc::new(CachedClient::new(http, dir).map_err(|e| format!("cache dir {}: {e}", dir.display()))?)),
        None => Ok(http),
    }
}

fn require<'a>(ep: Option<&'a ChatEndpoint>, role: &str) -> Result<&'a ChatEndpoint, String> {
    ep.ok_or_else(|| format!("no {role} endpoint configured; set it in the config or pass --endpoint-{role}"))
}

impl EndpointsConfig {
    pub fn bench_endpoints(&self, cache_dir: Option<&Path>) -> Result<BenchEndpoints, String> {
        let ogf = require(self.ogf.as_ref(), "ogf")?;
        let lg = require(self.lg.as_ref(), "lg")?;
        let baseline = self.baseline.as_ref().unwrap_or(lg);
        Ok(BenchEndpoints {
            ogf: build_client(ogf, cache_dir)?,
            lg: build_client(lg, cache_dir)?,
            baseline: build_client(baseline, cache_dir)?,
        })
    }

    pub fn teacher_and_judge(&self, cache_dir: Option<&Path>) -> Result<(Arc<dyn ChatClient>, Arc<dyn ChatClient>), String> {
        let teacher = match self.teacher.as_ref() {
            Some(t) => t,
            None => require(self.ogf.as_ref(), "ogf")?,
        };
        let judge = self.judge.as_ref().unwrap_or(teacher);
        Ok((build_client(teacher, cache_dir)?, build_client(judge, cache_dir)?))
    }
}
