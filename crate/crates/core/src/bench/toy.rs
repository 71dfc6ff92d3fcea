//! Config-driven toy bilevel training runs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bilevel::{bilevel_gap, train_alternating, SoftmaxPolicy, ToyHierarchicalTask, TrainConfig, TrainHistory};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TaskSpec {
    Dominant {
        questions: usize,
        models: usize,
        outputs: usize,
    },
    Constant {
        questions: usize,
        models: usize,
        outputs: usize,
        value: f64,
    },
    Random {
        questions: usize,
        models: usize,
        outputs: usize,
        #[serde(default)]
        binary: bool,
        seed: u64,
    },
    Explicit {
        rewards: Vec<Vec<Vec<f64>>>,
    },
}

impl TaskSpec {
    pub fn build(&self) -> Result<ToyHierarchicalTask, String> {
        let dims_ok = |q: usize, m: usize, o: usize| {
            if q == 0 || m == 0 || o == 0 {
                Err("task dimensions must be at least 1".to_string())
            } else {
                Ok(())
            }
        };
        match self {
            TaskSpec::Dominant { questions, models, outputs } => {
                dims_ok(*questions, *models, *outputs)?;
                Ok(ToyHierarchicalTask::dominant(*questions, *models, *outputs))
            }
            TaskSpec::Constant {
                questions,
                models,
                outputs,
                value,
            } => {
                dims_ok(*questions, *models, *outputs)?;
                ToyHierarchicalTask::new(vec![vec![vec![*value; *outputs]; *models]; *questions])
            }
            TaskSpec::Random {
                questions,
                models,
                outputs,
                binary,
                seed,
            } => {
                dims_ok(*questions, *models, *outputs)?;
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                Ok(ToyHierarchicalTask::random(&mut rng, *questions, *models, *outputs, *binary))
            }
            TaskSpec::Explicit { rewards } => ToyHierarchicalTask::new(rewards.clone()),
        }
    }
}

/// Pass criteria checked against the final iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    /// Minimum final expected reward as a fraction of the optimum.
    pub min_reward_fraction: Option<f64>,
    pub max_gap: Option<f64>,
    /// Upper argmax must pick the unique best model on every question.
    pub dominant_argmax: bool,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            min_reward_fraction: None,
            max_gap: None,
            dominant_argmax: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToyConfig {
    pub task: TaskSpec,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub thresholds: Thresholds,
}

#[derive(Debug, Error)]
pub enum ToyError {
    #[error("invalid config: {0}")]
    ConfigInvalid(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl ToyConfig {
    pub fn parse(text: &str) -> Result<ToyConfig, ToyError> {
        let cfg: ToyConfig = toml::from_str(text).map_err(|e| ToyError::ConfigInvalid(e.to_string()))?;
        cfg.train.validate().map_err(ToyError::ConfigInvalid)?;
        cfg.task.build().map_err(ToyError::ConfigInvalid)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<ToyConfig, ToyError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ToyError::ConfigInvalid(format!("{}: {e}", path.display())))?;
        ToyConfig::parse(&text)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToySummary {
    pub iterations: usize,
    pub seed: u64,
    pub final_expected_reward: f64,
    pub optimum: f64,
    pub reward_fraction: f64,
    pub bilevel_gap: f64,
    /// Per question: whether the upper argmax is the unique best model.
    /// `None` where no unique best model exists.
    pub argmax_is_dominant: Vec<Option<bool>>,
    pub failures: Vec<String>,
    pub passed: bool,
}

pub fn summarize(task: &ToyHierarchicalTask, cfg: &ToyConfig, history: &TrainHistory) -> ToySummary {
    let last = history.last();
    let optimum = task.optimum();
    let reward_fraction = if optimum > 0.0 { last.expected_reward / optimum } else { 1.0 };
    let gap = bilevel_gap(task, &last.theta_x, &last.theta_y);
    let argmax_is_dominant: Vec<Option<bool>> = (0..task.n_questions())
        .map(|q| task.dominant_model(q).map(|m| last.theta_x.argmax(q) == m))
        .collect();
    let mut failures = Vec::new();
    let t = &cfg.thresholds;
    if let Some(min) = t.min_reward_fraction {
        if reward_fraction < min {
            failures.push(format!("reward fraction {reward_fraction:.4} below {min}"));
        }
    }
    if let Some(max) = t.max_gap {
        if gap > max {
            failures.push(format!("bilevel gap {gap:.4} above {max}"));
        }
    }
    if t.dominant_argmax && argmax_is_dominant.iter().any(|d| *d != Some(true)) {
        failures.push("upper argmax misses the best model on some question".into());
    }
    ToySummary {
        iterations: history.records.len(),
        seed: cfg.train.seed,
        final_expected_reward: last.expected_reward,
        optimum,
        reward_fraction,
        bilevel_gap: gap,
        argmax_is_dominant,
        passed: failures.is_empty(),
        failures,
    }
}

pub fn render_summary(s: &ToySummary) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "iterations        {}", s.iterations);
    let _ = writeln!(out, "seed              {}", s.seed);
    let _ = writeln!(out, "expected reward   {:.6}", s.final_expected_reward);
    let _ = writeln!(out, "optimum           {:.6}", s.optimum);
    let _ = writeln!(out, "reward fraction   {:.6}", s.reward_fraction);
    let _ = writeln!(out, "bilevel gap       {:.6}", s.bilevel_gap);
    let _ = writeln!(out, "result            {}", if s.passed { "PASS" } else { "FAIL" });
    for f in &s.failures {
        let _ = writeln!(out, "  {f}");
    }
    out
}

#[derive(Serialize)]
struct PolicyTables<'a> {
    theta_x: &'a SoftmaxPolicy,
    theta_y: &'a SoftmaxPolicy,
}

/// Files written by [`train_toy`].
#[derive(Debug, Clone)]
pub struct ToyArtifacts {
    pub history: PathBuf,
    pub policies: PathBuf,
    pub summary_json: PathBuf,
    pub summary_txt: PathBuf,
}

/// Trains per `cfg` and writes `history.jsonl`, `policies.json`,
/// `summary.json` and `summary.txt` under `out_dir`. Output bytes depend
/// only on the config.
pub fn train_toy(cfg: &ToyConfig, out_dir: &Path) -> Result<(ToySummary, ToyArtifacts), ToyError> {
    cfg.train.validate().map_err(ToyError::ConfigInvalid)?;
    let task = cfg.task.build().map_err(ToyError::ConfigInvalid)?;
    let history = train_alternating(&task, &cfg.train).map_err(ToyError::ConfigInvalid)?;
    let summary = summarize(&task, cfg, &history);

    std::fs::create_dir_all(out_dir)?;
    let arts = ToyArtifacts {
        history: out_dir.join("history.jsonl"),
        policies: out_dir.join("policies.json"),
        summary_json: out_dir.join("summary.json"),
        summary_txt: out_dir.join("summary.txt"),
    };
    let mut lines = String::new();
    for r in &history.records {
        lines.push_str(&serde_json::to_string(r).expect("record serializes"));
        lines.push('\n');
    }
    std::fs::write(&arts.history, lines)?;
    let last = history.last();
    let tables = PolicyTables {
        theta_x: &last.theta_x,
        theta_y: &last.theta_y,
    };
    std::fs::write(&arts.policies, serde_json::to_string_pretty(&tables).expect("policies serialize") + "\n")?;
    std::fs::write(&arts.summary_json, serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n")?;
    std::fs::write(&arts.summary_txt, render_summary(&summary))?;
    Ok((summary, arts))
}

/// The shipped default config.
pub const DEFAULT_TOY_CONFIG: &str = include_str!("../../configs/toy_dominant.toml");

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_parses() {
        let cfg = ToyConfig::parse(DEFAULT_TOY_CONFIG).unwrap();
        assert_eq!(cfg.train.iterations, 200);
        assert!(cfg.thresholds.dominant_argmax);
    }

    #[test]
    fn bad_configs_are_rejected() {
        let zero_iters = "[task]\nkind = \"dominant\"\nquestions = 2\nmodels = 2\noutputs = 2\n[train]\niterations = 0\n";
        assert!(matches!(ToyConfig::parse(zero_iters), Err(ToyError::ConfigInvalid(_))));
        let bad_task = "[task]\nkind = \"dominant\"\nquestions = 0\nmodels = 2\noutputs = 2\n";
        assert!(ToyConfig::parse(bad_task).is_err());
        let unknown = "[task]\nkind = \"dominant\"\nquestions = 1\nmodels = 2\noutputs = 2\n[train]\nbogus = 1\n";
        assert!(ToyConfig::parse(unknown).is_err());
        let out_of_range = "[task]\nkind = \"explicit\"\nrewards = [[[2.0]]]\n";
        assert!(ToyConfig::parse(out_of_range).is_err());
    }
}
