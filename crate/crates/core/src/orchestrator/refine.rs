//! Refinement state machine: after a failed attempt, either regenerate the
//! program for the same model, send the diagnostic back to formalization, or
//! stop.

use serde::{Deserialize, Serialize};

use crate::executor::ExecutionStatus;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RefinementKind {
    RegenerateProgram,
    FeedbackToOGF,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefinementStep {
    pub kind: RefinementKind,
    pub cause: String,
    /// 1-based, strictly increasing within a trace.
    pub attempt: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    /// No candidate model parsed cleanly.
    InvalidModel,
    NoCodeBlock,
    Execution(ExecutionStatus),
}

impl FailureKind {
    pub fn is_program_level(self) -> bool {
        !matches!(self, FailureKind::InvalidModel)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub kind: FailureKind,
    pub diagnostic: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RefinePolicy {
    /// Maximum number of refinement steps in one trace.
    pub max_attempts: usize,
    /// Consecutive program-level failures on one model before escalating.
    pub escalate_after: usize,
}

impl Default for RefinePolicy {
    fn default() -> Self {
        RefinePolicy {
            max_attempts: 4,
            escalate_after: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decision {
    Step(RefinementStep),
    Abort,
}

/// Pure function of `(failure kind, history, policy)`; the diagnostic is
/// carried into the step verbatim.
pub fn decide_refinement(failure: &Failure, history: &[RefinementStep], policy: &RefinePolicy) -> Decision {
    if history.len() >= policy.max_attempts {
        return Decision::Abort;
    }
    let kind = if failure.kind.is_program_level() {
        let failures_on_model = 1 + history
            .iter()
            .rev()
            .take_while(|s| s.kind == RefinementKind::RegenerateProgram)
            .count();
        if failures_on_model >= policy.escalate_after {
            RefinementKind::FeedbackToOGF
        } else {
            RefinementKind::RegenerateProgram
        }
    } else {
        RefinementKind::FeedbackToOGF
    };
    Decision::Step(RefinementStep {
        kind,
        cause: failure.diagnostic.clone(),
        attempt: history.len() + 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use RefinementKind::*;

    fn exec_err() -> Failure {
        Failure {
            kind: FailureKind::Execution(ExecutionStatus::RuntimeError),
            diagnostic: "runtime_error: NameError".into(),
        }
    }

    fn step(kind: RefinementKind, attempt: usize) -> RefinementStep {
        RefinementStep { kind, cause: String::new(), attempt }
    }

    fn kind_of(d: Decision) -> Option<RefinementKind> {
        match d {
            Decision::Step(s) => Some(s.kind),
            Decision::Abort => None,
        }
    }

    #[test]
    fn first_failure_regenerates() {
        let p = RefinePolicy { max_attempts: 3, ..Default::default() };
        assert_eq!(kind_of(decide_refinement(&exec_err(), &[], &p)), Some(RegenerateProgram));
    }

    #[test]
    fn second_program_failure_escalates() {
        let p = RefinePolicy::default();
        let h = [step(RegenerateProgram, 1)];
        assert_eq!(kind_of(decide_refinement(&exec_err(), &h, &p)), Some(FeedbackToOGF));
        // the counter resets after escalation
        let h = [step(RegenerateProgram, 1), step(FeedbackToOGF, 2)];
        assert_eq!(kind_of(decide_refinement(&exec_err(), &h, &p)), Some(RegenerateProgram));
    }

    #[test]
    fn invalid_model_goes_to_formalization() {
        let f = Failure { kind: FailureKind::InvalidModel, diagnostic: "MissingSection".into() };
        assert_eq!(kind_of(decide_refinement(&f, &[], &RefinePolicy::default())), Some(FeedbackToOGF));
    }

    #[test]
    fn budget_exhausted_aborts() {
        let p = RefinePolicy { max_attempts: 2, ..Default::default() };
        let h = [step(RegenerateProgram, 1), step(FeedbackToOGF, 2)];
        assert_eq!(decide_refinement(&exec_err(), &h, &p), Decision::Abort);
        let zero = RefinePolicy { max_attempts: 0, ..Default::default() };
        assert_eq!(decide_refinement(&exec_err(), &[], &zero), Decision::Abort);
    }

    #[test]
    fn attempt_numbers_and_cause() {
        let h = [step(RegenerateProgram, 1)];
        match decide_refinement(&exec_err(), &h, &RefinePolicy::default()) {
            Decision::Step(s) => {
                assert_eq!(s.attempt, 2);
                assert_eq!(s.cause, "runtime_error: NameError");
            }
            Decision::Abort => panic!(),
        }
    }
}
