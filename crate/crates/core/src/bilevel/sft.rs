//! Supervised log-likelihood on tabular policies.

use super::policy::{PolicyGrad, SoftmaxPolicy};

/// `-sum log pi(target | ctx)` over `(ctx, target)` pairs.
pub fn sft_loss(policy: &SoftmaxPolicy, data: &[(usize, usize)]) -> f64 {
    -data.iter().map(|&(c, t)| policy.log_prob(c, t)).sum::<f64>()
}

/// Gradient of [`sft_loss`] with respect to the logits.
pub fn sft_grad(policy: &SoftmaxPolicy, data: &[(usize, usize)]) -> PolicyGrad {
    let mut g = PolicyGrad::zeros_like(policy);
    for &(c, t) in data {
        for (j, p) in policy.probs(c).iter().enumerate() {
            g.0[c][j] += p - if j == t { 1.0 } else { 0.0 };
        }
    }
    g
}

/// One gradient-descent step; returns the loss before the step.
pub fn sft_step(policy: &mut SoftmaxPolicy, data: &[(usize, usize)], lr: f64) -> f64 {
    let loss = sft_loss(policy, data);
    let g = sft_grad(policy, data);
    policy.step(&g, -lr);
    loss
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_losses() {
        let p = SoftmaxPolicy::uniform(&[2]);
        assert!((sft_loss(&p, &[(0, 1)]) - 2f64.ln()).abs() < 1e-12);
        let p = SoftmaxPolicy::uniform(&[4]);
        assert!((sft_loss(&p, &[(0, 0), (0, 3)]) - 2.0 * 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn saturated_target_has_vanishing_loss() {
        let mut last = f64::INFINITY;
        for big in [1.0, 5.0, 10.0, 20.0, 40.0] {
            let p = SoftmaxPolicy::from_logits(vec![vec![big, 0.0]]);
            let l = sft_loss(&p, &[(0, 0)]);
            assert!(l < last);
            last = l;
        }
        assert!(last < 1e-15);
    }
}
