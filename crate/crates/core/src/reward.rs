//! Rule-based rewards and group-normalized advantages.

use serde::{Deserialize, Serialize};

use crate::executor::{answers_match, normalize_answer, CanonicalAnswer, ExecutionResult, DEFAULT_TOLERANCE};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardConfig {
    pub accuracy_weight: f64,
    pub format_weight: f64,
    /// Lower bound on the group standard deviation used as divisor.
    pub std_floor: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig {
            accuracy_weight: 1.0,
            format_weight: 0.1,
            std_floor: 1e-8,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.accuracy_weight >= 0.0 && self.format_weight >= 0.0) {
            return Err("reward weights must be non-negative".into());
        }
        if !(self.std_floor > 0.0) {
            return Err("std_floor must be positive".into());
        }
        Ok(())
    }
}

/// Whether an execution produced an answer matching `gold`. Failed runs and
/// answers that do not coerce to the gold kind count as wrong.
pub fn answer_correct(result: &ExecutionResult, gold: &CanonicalAnswer) -> bool {
    let Some(raw) = result.answer.as_deref().filter(|_| result.is_ok()) else {
        return false;
    };
    normalize_answer(raw, Some(gold.kind()))
        .map(|a| answers_match(&a, gold, DEFAULT_TOLERANCE))
        .unwrap_or(false)
}

/// Reward of one lower-level output.
pub fn score_output(result: &ExecutionResult, gold: &CanonicalAnswer, format_ok: bool, cfg: &RewardConfig) -> f64 {
    indicator_reward(answer_correct(result, gold), format_ok, cfg)
}

pub fn indicator_reward(answer_ok: bool, format_ok: bool, cfg: &RewardConfig) -> f64 {
    cfg.accuracy_weight * f64::from(u8::from(answer_ok)) + cfg.format_weight * f64::from(u8::from(format_ok))
}

/// Reward of one model candidate: its own format term plus the mean of the
/// accuracy components of its lower-level outputs.
pub fn upper_reward(lower_accuracy: &[f64], model_format_ok: bool, cfg: &RewardConfig) -> f64 {
    assert!(!lower_accuracy.is_empty(), "upper_reward needs at least one lower output");
    cfg.format_weight * f64::from(u8::from(model_format_ok)) + mean(lower_accuracy)
}

pub fn lower_advantages(rewards: &[f64], std_floor: f64) -> Vec<f64> {
    normalize_group(rewards, std_floor)
}

pub fn upper_advantages(model_rewards: &[f64], std_floor: f64) -> Vec<f64> {
    normalize_group(model_rewards, std_floor)
}

/// `(r - mean) / max(std, floor)` with the population standard deviation.
/// Constant groups give exact zeros.
pub fn normalize_group(rewards: &[f64], std_floor: f64) -> Vec<f64> {
    assert!(!rewards.is_empty(), "advantage group must be nonempty");
    // the float mean of equal values can be off by an ulp, which the floor
    // would blow up to ~1e-8
    if rewards.iter().all(|r| *r == rewards[0]) {
        return vec![0.0; rewards.len()];
    }
    let m = mean(rewards);
    let sd = population_std(rewards, m).max(std_floor);
    rewards.iter().map(|r| (r - m) / sd).collect()
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn population_std(xs: &[f64], m: f64) -> f64 {
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutputOutcome {
    pub format_ok: bool,
    pub answer_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardedOutput {
    pub reward: f64,
    pub advantage: f64,
    pub format_ok: bool,
    pub answer_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardedModel {
    pub model_reward: f64,
    pub advantage: f64,
    pub format_ok: bool,
    pub outputs: Vec<RewardedOutput>,
}

/// G model candidates for one question, each with P scored outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardedGroup {
    pub question_id: String,
    pub models: Vec<RewardedModel>,
}

impl RewardedGroup {
    /// Scores and normalizes a full group. `models[i]` pairs the i-th model's
    /// format flag with the outcomes of its outputs.
    pub fn build(question_id: impl Into<String>, models: &[(bool, Vec<OutputOutcome>)], cfg: &RewardConfig) -> Self {
        let mut built: Vec<RewardedModel> = models
            .iter()
            .map(|(format_ok, outs)| {
                let rewards: Vec<f64> = outs.iter().map(|o| indicator_reward(o.answer_ok, o.format_ok, cfg)).collect();
                let accuracy: Vec<f64> = outs
                    .iter()
                    .map(|o| cfg.accuracy_weight * f64::from(u8::from(o.answer_ok)))
                    .collect();
                let adv = lower_advantages(&rewards, cfg.std_floor);
                RewardedModel {
                    model_reward: upper_reward(&accuracy, *format_ok, cfg),
                    advantage: 0.0,
                    format_ok: *format_ok,
                    outputs: outs
                        .iter()
                        .zip(rewards.iter().zip(adv))
                        .map(|(o, (&reward, advantage))| RewardedOutput {
                            reward,
                            advantage,
                            format_ok: o.format_ok,
                            answer_ok: o.answer_ok,
                        })
                        .collect(),
                }
            })
            .collect();
        let model_rewards: Vec<f64> = built.iter().map(|m| m.model_reward).collect();
        for (m, a) in built.iter_mut().zip(upper_advantages(&model_rewards, cfg.std_floor)) {
            m.advantage = a;
        }
        RewardedGroup {
            question_id: question_id.into(),
            models: built,
        }
    }
}
