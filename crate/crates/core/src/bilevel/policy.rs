use rand::Rng;
use serde::{Deserialize, Serialize};

/// Tabular softmax policy: one row of logits per context, rows may differ
/// in length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftmaxPolicy {
    pub logits: Vec<Vec<f64>>,
}

/// Gradient with the same ragged shape as a policy's logits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyGrad(pub Vec<Vec<f64>>);

impl PolicyGrad {
    pub fn zeros_like(p: &SoftmaxPolicy) -> Self {
        PolicyGrad(p.logits.iter().map(|r| vec![0.0; r.len()]).collect())
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().flatten().map(|g| g * g).sum::<f64>().sqrt()
    }

    pub fn add_scaled(&mut self, other: &PolicyGrad, scale: f64) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += scale * y;
            }
        }
    }

    pub fn flat(&self) -> Vec<f64> {
        self.0.iter().flatten().copied().collect()
    }
}

impl SoftmaxPolicy {
    /// Uniform policy (all logits zero).
    pub fn uniform(sizes: &[usize]) -> Self {
        assert!(sizes.iter().all(|&n| n > 0), "every context needs a candidate");
        SoftmaxPolicy {
            logits: sizes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn from_logits(logits: Vec<Vec<f64>>) -> Self {
        assert!(logits.iter().all(|r| !r.is_empty()), "every context needs a candidate");
        SoftmaxPolicy { logits }
    }

    pub fn n_contexts(&self) -> usize {
        self.logits.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.logits.iter().map(Vec::len).collect()
    }

    /// Numerically stable softmax of one row.
    pub fn probs(&self, ctx: usize) -> Vec<f64> {
        let row = &self.logits[ctx];
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = row.iter().map(|l| (l - max).exp()).collect();
        let z: f64 = exps.iter().sum();
        exps.into_iter().map(|e| e / z).collect()
    }

    pub fn prob(&self, ctx: usize, choice: usize) -> f64 {
        self.probs(ctx)[choice]
    }

    pub fn log_prob(&self, ctx: usize, choice: usize) -> f64 {
        let row = &self.logits[ctx];
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
        row[choice] - lse
    }

    pub fn sample(&self, ctx: usize, rng: &mut impl Rng) -> usize {
        let probs = self.probs(ctx);
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (j, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return j;
            }
        }
        probs.len() - 1
    }

    /// Lowest index among the maximal logits.
    pub fn argmax(&self, ctx: usize) -> usize {
        let row = &self.logits[ctx];
        (0..row.len()).fold(0, |best, j| if row[j] > row[best] { j } else { best })
    }

    pub fn step(&mut self, grad: &PolicyGrad, lr: f64) {
        for (row, g) in self.logits.iter_mut().zip(&grad.0) {
            for (l, d) in row.iter_mut().zip(g) {
                *l += lr * d;
            }
        }
    }

    pub fn flat(&self) -> Vec<f64> {
        self.logits.iter().flatten().copied().collect()
    }

    /// Overwrites logit number `i` in row-major order.
    pub fn set_flat(&mut self, i: usize, value: f64) {
        let mut i = i;
        for row in self.logits.iter_mut() {
            if i < row.len() {
                row[i] = value;
                return;
            }
            i -= row.len();
        }
        panic!("flat index out of range");
    }
}
