//! Bilevel group-relative policy optimization on tabular toy policies.
//!
//! The upper policy picks a model per question, the lower policy picks an
//! output per model. Both levels are trained with the same clipped-ratio
//! surrogate on group-normalized advantages, alternating between levels.
//! Everything is small enough to compute expectations and best responses
//! exactly.

pub mod objective;
pub mod policy;
pub mod sft;
pub mod task;
pub mod train;

pub use objective::{
    clipped_term, is_clipped, lower_objective, ratio, surrogate, surrogate_grad, upper_objective, GroupSample,
    KlPenalty, SampledGroup,
};
pub use policy::{PolicyGrad, SoftmaxPolicy};
pub use sft::{sft_grad, sft_loss, sft_step};
pub use task::ToyHierarchicalTask;
pub use train::{
    best_response_value, bilevel_gap, expected_reward, train_alternating, train_from, IterationRecord, TrainConfig,
    TrainHistory,
};
