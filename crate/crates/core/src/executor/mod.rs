//! Program execution behind a pluggable backend, plus answer normalization.
//!
//! Two backends implement [`Executor`]: the built-in [`MiniInterpreter`] and
//! [`SubprocessExecutor`], which talks line-delimited JSON to an external
//! sandbox runner. Failures never escape as errors; they are encoded in
//! [`ExecutionResult::status`].

mod answer;
pub mod interp;
pub mod protocol;
mod subprocess;

use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use answer::{answers_match, normalize_answer, AnswerError, AnswerKind, CanonicalAnswer, DEFAULT_TOLERANCE};
pub use interp::MiniInterpreter;
pub use subprocess::SubprocessExecutor;

const EXCERPT_CHARS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExecutionLimits {
    #[serde(rename = "wall_timeout_s", with = "secs")]
    pub wall_timeout: Duration,
    pub memory_cap: u64,
    pub output_cap: u64,
}

impl Default for ExecutionLimits {
    fn default() -> Self {
        ExecutionLimits {
            wall_timeout: Duration::from_secs(10),
            memory_cap: 512 * 1024 * 1024,
            output_cap: 64 * 1024,
        }
    }
}

impl ExecutionLimits {
    pub fn validate(&self) -> Result<(), String> {
        if self.wall_timeout.is_zero() || self.memory_cap == 0 || self.output_cap == 0 {
            return Err("execution limits must all be positive".into());
        }
        Ok(())
    }
}

mod secs {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let v = f64::deserialize(d)?;
        Duration::try_from_secs_f64(v).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecutionStatus {
    Ok,
    Timeout,
    RuntimeError,
    ForbiddenOperation,
    OutputOverflow,
}

impl ExecutionStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            ExecutionStatus::Ok => "ok",
            ExecutionStatus::Timeout => "timeout",
            ExecutionStatus::RuntimeError => "runtime_error",
            ExecutionStatus::ForbiddenOperation => "forbidden_operation",
            ExecutionStatus::OutputOverflow => "output_overflow",
        }
    }
}

/// Outcome of running one program. `answer` is present iff `status` is `Ok`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionResult {
    pub status: ExecutionStatus,
    pub answer: Option<String>,
    pub stderr_excerpt: String,
    /// Seconds.
    pub elapsed: f64,
}

impl ExecutionResult {
    pub fn failure(status: ExecutionStatus, stderr: impl AsRef<str>, elapsed: f64) -> Self {
        debug_assert_ne!(status, ExecutionStatus::Ok);
        ExecutionResult {
            status,
            answer: None,
            stderr_excerpt: excerpt(stderr.as_ref()),
            elapsed,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == ExecutionStatus::Ok
    }

    /// One-line summary used as refinement feedback.
    pub fn diagnostic(&self) -> String {
        match self.status {
            ExecutionStatus::Ok => "ok".into(),
            s if self.stderr_excerpt.is_empty() => s.as_str().into(),
            s => format!("{}: {}", s.as_str(), self.stderr_excerpt),
        }
    }
}

pub(crate) fn excerpt(s: &str) -> String {
    let s = s.trim();
    match s.char_indices().nth(EXCERPT_CHARS) {
        Some((cut, _)) => format!("{}...", &s[..cut]),
        None => s.to_string(),
    }
}

pub trait Executor: Send + Sync {
    fn name(&self) -> &str;

    /// Runs `program` under `limits`. Never panics on bad input.
    fn execute(&self, program: &str, limits: &ExecutionLimits) -> ExecutionResult;
}

/// Runs a program through `backend`, rejecting empty programs up front.
pub fn execute(program: &str, limits: &ExecutionLimits, backend: &dyn Executor) -> ExecutionResult {
    if program.trim().is_empty() {
        return ExecutionResult::failure(ExecutionStatus::RuntimeError, "empty program", 0.0);
    }
    backend.execute(program, limits)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn limits_json_uses_seconds() {
        let json = serde_json::to_string(&ExecutionLimits::default()).unwrap();
        assert_eq!(
            json,
            r#"{"wall_timeout_s":10.0,"memory_cap":536870912,"output_cap":65536}"#
        );
        let back: ExecutionLimits = serde_json::from_str(&json).unwrap();
        assert_eq!(back, ExecutionLimits::default());
    }

    #[test]
    fn empty_program_is_rejected() {
        let r = execute("  \n", &ExecutionLimits::default(), &MiniInterpreter);
        assert_eq!(r.status, ExecutionStatus::RuntimeError);
        assert!(r.answer.is_none());
    }

    #[test]
    fn excerpt_truncates() {
        let long = "x".repeat(EXCERPT_CHARS + 10);
        assert_eq!(excerpt(&long).len(), EXCERPT_CHARS + 3);
    }
}
