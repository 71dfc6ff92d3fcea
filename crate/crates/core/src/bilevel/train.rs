//! Alternating bilevel training on a toy task.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::objective::{surrogate, surrogate_grad, KlPenalty, SampledGroup};
use super::policy::{PolicyGrad, SoftmaxPolicy};
use super::task::ToyHierarchicalTask;
use crate::reward::{lower_advantages, mean, upper_advantages};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Outer iterations.
    pub iterations: usize,
    /// Questions sampled per update.
    pub batch_size: usize,
    /// Model candidates per question in upper updates.
    pub upper_group: usize,
    /// Outputs per model.
    pub lower_group: usize,
    pub lower_updates: usize,
    pub upper_updates: usize,
    pub epsilon: f64,
    pub lr_upper: f64,
    pub lr_lower: f64,
    pub seed: u64,
    pub std_floor: f64,
    /// KL weight against the initial policy; 0 disables the penalty.
    pub kl_coef: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            iterations: 200,
            batch_size: 4,
            upper_group: 4,
            lower_group: 4,
            lower_updates: 4,
            upper_updates: 4,
            epsilon: 0.2,
            lr_upper: 0.1,
            lr_lower: 0.1,
            seed: 0,
            std_floor: 1e-8,
            kl_coef: 0.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), String> {
        let counts = [
            ("iterations", self.iterations),
            ("batch_size", self.batch_size),
            ("upper_group", self.upper_group),
            ("lower_group", self.lower_group),
            ("lower_updates", self.lower_updates),
            ("upper_updates", self.upper_updates),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(format!("{name} must be at least 1"));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err("epsilon must lie in (0, 1)".into());
        }
        if !(self.lr_upper > 0.0 && self.lr_lower > 0.0) {
            return Err("learning rates must be positive".into());
        }
        if !(self.std_floor > 0.0) || !(self.kl_coef >= 0.0) {
            return Err("std_floor must be positive and kl_coef non-negative".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Exact expected reward after this iteration.
    pub expected_reward: f64,
    /// Upper surrogate after each step on its own batch, averaged over the
    /// inner updates.
    pub upper_objective: f64,
    pub lower_objective: f64,
    pub upper_grad_norm: f64,
    pub lower_grad_norm: f64,
    pub theta_x: SoftmaxPolicy,
    pub theta_y: SoftmaxPolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub records: Vec<IterationRecord>,
}

impl TrainHistory {
    pub fn last(&self) -> &IterationRecord {
        self.records.last().expect("history is nonempty")
    }
}

/// Exact expected reward of the two-level policy, averaged over questions.
pub fn expected_reward(task: &ToyHierarchicalTask, theta_x: &SoftmaxPolicy, theta_y: &SoftmaxPolicy) -> f64 {
    let total: f64 = (0..task.n_questions())
        .map(|q| {
            theta_x
                .probs(q)
                .iter()
                .enumerate()
                .map(|(m, pm)| {
                    let ctx = task.lower_ctx(q, m);
                    let inner: f64 = theta_y
                        .probs(ctx)
                        .iter()
                        .enumerate()
                        .map(|(o, po)| po * task.reward(q, m, o))
                        .sum();
                    pm * inner
                })
                .sum::<f64>()
        })
        .sum();
    total / task.n_questions() as f64
}

/// Expected reward when every lower context plays its best output: the
/// value of the exhaustive best response to `theta_x`.
pub fn best_response_value(task: &ToyHierarchicalTask, theta_x: &SoftmaxPolicy) -> f64 {
    let total: f64 = (0..task.n_questions())
        .map(|q| {
            theta_x
                .probs(q)
                .iter()
                .enumerate()
                .map(|(m, pm)| pm * task.rewards[q][m].iter().copied().fold(f64::NEG_INFINITY, f64::max))
                .sum::<f64>()
        })
        .sum();
    total / task.n_questions() as f64
}

/// How far the lower level is from its best response, measured on the
/// exact expected lower reward under `theta_x`.
pub fn bilevel_gap(task: &ToyHierarchicalTask, theta_x: &SoftmaxPolicy, theta_y: &SoftmaxPolicy) -> f64 {
    best_response_value(task, theta_x) - expected_reward(task, theta_x, theta_y)
}

struct Trainer<'a> {
    task: &'a ToyHierarchicalTask,
    cfg: &'a TrainConfig,
    rng: ChaCha8Rng,
    theta_x: SoftmaxPolicy,
    theta_y: SoftmaxPolicy,
    ref_x: SoftmaxPolicy,
    ref_y: SoftmaxPolicy,
}

impl Trainer<'_> {
    fn kl<'p>(&self, reference: &'p SoftmaxPolicy) -> Option<KlPenalty<'p>> {
        (self.cfg.kl_coef > 0.0).then_some(KlPenalty {
            coef: self.cfg.kl_coef,
            reference,
        })
    }

    /// Samples `B` questions, one model each from the frozen upper policy,
    /// and `P` outputs from the frozen lower policy.
    fn lower_batch(&mut self, x_old: &SoftmaxPolicy, y_old: &SoftmaxPolicy) -> Vec<SampledGroup> {
        (0..self.cfg.batch_size)
            .map(|_| {
                let q = self.rng.gen_range(0..self.task.n_questions());
                let m = x_old.sample(q, &mut self.rng);
                let ctx = self.task.lower_ctx(q, m);
                let outs: Vec<usize> = (0..self.cfg.lower_group).map(|_| y_old.sample(ctx, &mut self.rng)).collect();
                let rewards: Vec<f64> = outs.iter().map(|&o| self.task.reward(q, m, o)).collect();
                SampledGroup::new(ctx, &outs, &lower_advantages(&rewards, self.cfg.std_floor))
            })
            .collect()
    }

    /// Samples `B` questions, `G` models each from the frozen upper policy,
    /// and scores each model by the mean reward of `P` outputs from the
    /// current lower policy.
    fn upper_batch(&mut self, x_old: &SoftmaxPolicy) -> Vec<SampledGroup> {
        (0..self.cfg.batch_size)
            .map(|_| {
                let q = self.rng.gen_range(0..self.task.n_questions());
                let models: Vec<usize> = (0..self.cfg.upper_group).map(|_| x_old.sample(q, &mut self.rng)).collect();
                let model_rewards: Vec<f64> = models
                    .iter()
                    .map(|&m| {
                        let ctx = self.task.lower_ctx(q, m);
                        let rs: Vec<f64> = (0..self.cfg.lower_group)
                            .map(|_| {
                                let o = self.theta_y.sample(ctx, &mut self.rng);
                                self.task.reward(q, m, o)
                            })
                            .collect();
                        mean(&rs)
                    })
                    .collect();
                SampledGroup::new(q, &models, &upper_advantages(&model_rewards, self.cfg.std_floor))
            })
            .collect()
    }

    fn lower_phase(&mut self) -> (f64, f64) {
        let x_old = self.theta_x.clone();
        let y_old = self.theta_y.clone();
        let (mut obj, mut norm) = (0.0, 0.0);
        for _ in 0..self.cfg.lower_updates {
            let groups = self.lower_batch(&x_old, &y_old);
            let g: PolicyGrad = surrogate_grad(&self.theta_y, &y_old, &groups, self.cfg.epsilon, self.kl(&self.ref_y));
            self.theta_y.step(&g, self.cfg.lr_lower);
            obj += surrogate(&self.theta_y, &y_old, &groups, self.cfg.epsilon, self.kl(&self.ref_y));
            norm += g.norm();
        }
        let n = self.cfg.lower_updates as f64;
        (obj / n, norm / n)
    }

    fn upper_phase(&mut self) -> (f64, f64) {
        let x_old = self.theta_x.clone();
        let (mut obj, mut norm) = (0.0, 0.0);
        for _ in 0..self.cfg.upper_updates {
            let groups = self.upper_batch(&x_old);
            let g = surrogate_grad(&self.theta_x, &x_old, &groups, self.cfg.epsilon, self.kl(&self.ref_x));
            self.theta_x.step(&g, self.cfg.lr_upper);
            obj += surrogate(&self.theta_x, &x_old, &groups, self.cfg.epsilon, self.kl(&self.ref_x));
            norm += g.norm();
        }
        let n = self.cfg.upper_updates as f64;
        (obj / n, norm / n)
    }
}

/// Runs `I` iterations of: `N_l` lower updates, then `N_h` upper updates.
/// Old-policy snapshots are taken at the entry of each phase. Starts from
/// uniform policies.
pub fn train_alternating(task: &ToyHierarchicalTask, cfg: &TrainConfig) -> Result<TrainHistory, String> {
    let x0 = SoftmaxPolicy::uniform(&task.upper_sizes());
    let y0 = SoftmaxPolicy::uniform(&task.lower_sizes());
    train_from(task, cfg, x0, y0)
}

pub fn train_from(
    task: &ToyHierarchicalTask,
    cfg: &TrainConfig,
    theta_x: SoftmaxPolicy,
    theta_y: SoftmaxPolicy,
) -> Result<TrainHistory, String> {
    cfg.validate()?;
    if theta_x.sizes() != task.upper_sizes() || theta_y.sizes() != task.lower_sizes() {
        return Err("policy shapes do not match the task".into());
    }
    let mut t = Trainer {
        task,
        cfg,
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        ref_x: theta_x.clone(),
        ref_y: theta_y.clone(),
        theta_x,
        theta_y,
    };
    let mut records = Vec::with_capacity(cfg.iterations);
    for iteration in 0..cfg.iterations {
        let (lower_objective, lower_grad_norm) = t.lower_phase();
        let (upper_objective, upper_grad_norm) = t.upper_phase();
        records.push(IterationRecord {
            iteration,
            expected_reward: expected_reward(task, &t.theta_x, &t.theta_y),
            upper_objective,
            lower_objective,
            upper_grad_norm,
            lower_grad_norm,
            theta_x: t.theta_x.clone(),
            theta_y: t.theta_y.clone(),
        });
    }
    Ok(TrainHistory { records })
}
