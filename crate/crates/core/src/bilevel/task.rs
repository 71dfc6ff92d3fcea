use rand::Rng;
use serde::{Deserialize, Serialize};

/// Finite question → model → output tree with a reward per leaf.
///
/// Upper contexts are questions. Lower contexts are models, numbered
/// globally across questions in question-major order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyHierarchicalTask {
    /// `rewards[q][m][o]` in [0, 1].
    pub rewards: Vec<Vec<Vec<f64>>>,
}

impl ToyHierarchicalTask {
    pub fn new(rewards: Vec<Vec<Vec<f64>>>) -> Result<Self, String> {
        if rewards.is_empty() {
            return Err("task needs at least one question".into());
        }
        for (q, models) in rewards.iter().enumerate() {
            if models.is_empty() {
                return Err(format!("question {q} has no models"));
            }
            for (m, outs) in models.iter().enumerate() {
                if outs.is_empty() {
                    return Err(format!("model {m} of question {q} has no outputs"));
                }
                if outs.iter().any(|r| !(0.0..=1.0).contains(r)) {
                    return Err(format!("reward outside [0, 1] at ({q}, {m})"));
                }
            }
        }
        Ok(ToyHierarchicalTask { rewards })
    }

    /// Question `q`'s model `dominant(q) = q mod models` rewards every output
    /// with 1; all other outputs reward 0.
    pub fn dominant(questions: usize, models: usize, outputs: usize) -> Self {
        let rewards = (0..questions)
            .map(|q| {
                (0..models)
                    .map(|m| vec![if m == q % models { 1.0 } else { 0.0 }; outputs])
                    .collect()
            })
            .collect();
        ToyHierarchicalTask::new(rewards).expect("well-formed")
    }

    pub fn constant(questions: usize, models: usize, outputs: usize, value: f64) -> Self {
        ToyHierarchicalTask::new(vec![vec![vec![value; outputs]; models]; questions]).expect("well-formed")
    }

    /// Independent uniform rewards, optionally rounded to {0, 1}.
    pub fn random(rng: &mut impl Rng, questions: usize, models: usize, outputs: usize, binary: bool) -> Self {
        let rewards = (0..questions)
            .map(|_| {
                (0..models)
                    .map(|_| {
                        (0..outputs)
                            .map(|_| {
                                let r: f64 = rng.gen();
                                if binary { r.round() } else { r }
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        ToyHierarchicalTask::new(rewards).expect("well-formed")
    }

    pub fn n_questions(&self) -> usize {
        self.rewards.len()
    }

    /// The unique model holding the best leaf of question `q`, if unique.
    pub fn dominant_model(&self, q: usize) -> Option<usize> {
        let best: Vec<f64> = self.rewards[q]
            .iter()
            .map(|o| o.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .collect();
        let top = best.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let winners: Vec<usize> = (0..best.len()).filter(|&m| best[m] == top).collect();
        (winners.len() == 1).then(|| winners[0])
    }

    pub fn upper_sizes(&self) -> Vec<usize> {
        self.rewards.iter().map(Vec::len).collect()
    }

    pub fn lower_sizes(&self) -> Vec<usize> {
        self.rewards.iter().flatten().map(Vec::len).collect()
    }

    /// Global lower-context index of model `m` under question `q`.
    pub fn lower_ctx(&self, q: usize, m: usize) -> usize {
        self.rewards[..q].iter().map(Vec::len).sum::<usize>() + m
    }

    pub fn reward(&self, q: usize, m: usize, o: usize) -> f64 {
        self.rewards[q][m][o]
    }

    /// Best achievable expected reward: mean over questions of the best leaf.
    pub fn optimum(&self) -> f64 {
        let total: f64 = self
            .rewards
            .iter()
            .map(|models| models.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max))
            .sum();
        total / self.n_questions() as f64
    }
}
