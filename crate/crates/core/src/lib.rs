//! Formalize-then-program reasoning engine.
//!
//! A question is first turned into a five-tuple [`model::FormalModel`], then
//! into a logic plan and an executable program, which is run by an
//! [`executor::Executor`]. Around that pipeline sit rule-based rewards and
//! group-normalized advantages, a rejection-sampling dataset builder, a
//! bilevel GRPO trainer on tabular toy policies, and a benchmark harness.

pub mod bench;
pub mod bilevel;
pub mod config;
pub mod dataset;
pub mod executor;
pub mod llm;
pub mod model;
pub mod orchestrator;
pub mod par;
pub mod reward;
