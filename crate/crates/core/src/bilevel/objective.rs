//! Clipped-ratio group surrogate shared by both levels, and its analytic
//! gradient with respect to the logits.
//!
//! For groups `g` of sampled choices with advantages,
//! `J = mean_g mean_{i in g} min(rho_i A_i, clip(rho_i, 1-eps, 1+eps) A_i)`
//! with `rho_i = pi(c_i | ctx_g) / pi_old(c_i | ctx_g)`. An optional KL term
//! `-beta * mean_g KL(pi(.|ctx_g) || pi_ref(.|ctx_g))` is subtracted.

use serde::{Deserialize, Serialize};

use super::policy::{PolicyGrad, SoftmaxPolicy};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupSample {
    pub choice: usize,
    pub advantage: f64,
}

/// Samples drawn in one context under the old policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledGroup {
    pub ctx: usize,
    pub samples: Vec<GroupSample>,
}

impl SampledGroup {
    pub fn new(ctx: usize, choices: &[usize], advantages: &[f64]) -> Self {
        assert_eq!(choices.len(), advantages.len());
        SampledGroup {
            ctx,
            samples: choices
                .iter()
                .zip(advantages)
                .map(|(&choice, &advantage)| GroupSample { choice, advantage })
                .collect(),
        }
    }
}

/// Optional KL penalty against a fixed reference policy.
#[derive(Debug, Clone, Copy)]
pub struct KlPenalty<'a> {
    pub coef: f64,
    pub reference: &'a SoftmaxPolicy,
}

pub fn ratio(policy: &SoftmaxPolicy, old: &SoftmaxPolicy, ctx: usize, choice: usize) -> f64 {
    let p_old = old.prob(ctx, choice);
    assert!(p_old > 0.0, "old probability of a sampled choice is zero");
    (policy.log_prob(ctx, choice) - old.log_prob(ctx, choice)).exp()
}

pub fn clipped_term(rho: f64, advantage: f64, epsilon: f64) -> f64 {
    (rho * advantage).min(rho.clamp(1.0 - epsilon, 1.0 + epsilon) * advantage)
}

/// True when the clipped branch is strictly smaller, so the term is flat in
/// the logits.
pub fn is_clipped(rho: f64, advantage: f64, epsilon: f64) -> bool {
    (advantage > 0.0 && rho > 1.0 + epsilon) || (advantage < 0.0 && rho < 1.0 - epsilon)
}

fn kl(p: &[f64], r: &[f64]) -> f64 {
    p.iter().zip(r).filter(|(pi, _)| **pi > 0.0).map(|(pi, ri)| pi * (pi / ri).ln()).sum()
}

pub fn surrogate(
    policy: &SoftmaxPolicy,
    old: &SoftmaxPolicy,
    groups: &[SampledGroup],
    epsilon: f64,
    kl_penalty: Option<KlPenalty<'_>>,
) -> f64 {
    if groups.is_empty() {
        return 0.0;
    }
    let mut total = 0.0;
    for g in groups {
        let n = g.samples.len() as f64;
        total += g
            .samples
            .iter()
            .map(|s| clipped_term(ratio(policy, old, g.ctx, s.choice), s.advantage, epsilon))
            .sum::<f64>()
            / n;
        if let Some(k) = kl_penalty {
            total -= k.coef * kl(&policy.probs(g.ctx), &k.reference.probs(g.ctx));
        }
    }
    total / groups.len() as f64
}

pub fn surrogate_grad(
    policy: &SoftmaxPolicy,
    old: &SoftmaxPolicy,
    groups: &[SampledGroup],
    epsilon: f64,
    kl_penalty: Option<KlPenalty<'_>>,
) -> PolicyGrad {
    let mut grad = PolicyGrad::zeros_like(policy);
    if groups.is_empty() {
        return grad;
    }
    let n_groups = groups.len() as f64;
    for g in groups {
        let probs = policy.probs(g.ctx);
        let row = &mut grad.0[g.ctx];
        let w = 1.0 / (g.samples.len() as f64 * n_groups);
        for s in &g.samples {
            let rho = ratio(policy, old, g.ctx, s.choice);
            if is_clipped(rho, s.advantage, epsilon) {
                continue;
            }
            // d rho / d logit_j = rho * (1[j = choice] - pi_j)
            for (j, pj) in probs.iter().enumerate() {
                let ind = if j == s.choice { 1.0 } else { 0.0 };
                row[j] += w * s.advantage * rho * (ind - pj);
            }
        }
        if let Some(k) = kl_penalty {
            let r = k.reference.probs(g.ctx);
            let d = kl(&probs, &r);
            for (j, pj) in probs.iter().enumerate() {
                row[j] -= k.coef / n_groups * pj * ((pj / r[j]).ln() - d);
            }
        }
    }
    grad
}

/// Upper-level surrogate over question contexts.
pub fn upper_objective(theta_x: &SoftmaxPolicy, theta_x_old: &SoftmaxPolicy, groups: &[SampledGroup], epsilon: f64) -> f64 {
    surrogate(theta_x, theta_x_old, groups, epsilon, None)
}

/// Lower-level surrogate over model contexts.
pub fn lower_objective(theta_y: &SoftmaxPolicy, theta_y_old: &SoftmaxPolicy, groups: &[SampledGroup], epsilon: f64) -> f64 {
    surrogate(theta_y, theta_y_old, groups, epsilon, None)
}
