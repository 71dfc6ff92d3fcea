//! Line-delimited JSON protocol spoken with the external sandbox runner.
//!
//! One request per line on the runner's stdin, one response per line on its
//! stdout. Field order on the wire follows the struct declarations.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{ExecutionLimits, ExecutionStatus};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunnerRequest {
    pub id: u64,
    pub program: String,
    pub timeout_s: f64,
    pub mem_bytes: u64,
}

impl RunnerRequest {
    pub fn new(id: u64, program: &str, limits: &ExecutionLimits) -> Self {
        RunnerRequest {
            id,
            program: program.to_string(),
            timeout_s: limits.wall_timeout.as_secs_f64(),
            mem_bytes: limits.memory_cap,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunnerResponse {
    /// Null only when the runner could not read the request id.
    pub id: Option<u64>,
    pub status: ExecutionStatus,
    #[serde(default)]
    pub answer: Option<String>,
    #[serde(default)]
    pub stderr: String,
    pub elapsed_s: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error("response is not valid JSON: {0}")]
    Json(String),
    #[error("response status {status} inconsistent with answer presence")]
    AnswerMismatch { status: &'static str },
    #[error("response elapsed_s is negative or not finite")]
    BadElapsed,
}

/// Encodes a request as one line, terminated by `\n`.
pub fn encode_request(req: &RunnerRequest) -> String {
    let mut line = serde_json::to_string(req).expect("request serializes");
    line.push('\n');
    line
}

pub fn encode_response(resp: &RunnerResponse) -> String {
    let mut line = serde_json::to_string(resp).expect("response serializes");
    line.push('\n');
    line
}

pub fn decode_request(line: &str) -> Result<RunnerRequest, ProtocolError> {
    serde_json::from_str(line.trim_end_matches(['\r', '\n'])).map_err(|e| ProtocolError::Json(e.to_string()))
}

/// Parses and validates one response line.
pub fn decode_response(line: &str) -> Result<RunnerResponse, ProtocolError> {
    let resp: RunnerResponse = serde_json::from_str(line.trim_end_matches(['\r', '\n']))
        .map_err(|e| ProtocolError::Json(e.to_string()))?;
    if (resp.status == ExecutionStatus::Ok) != resp.answer.is_some() {
        return Err(ProtocolError::AnswerMismatch {
            status: resp.status.as_str(),
        });
    }
    if !resp.elapsed_s.is_finite() || resp.elapsed_s < 0.0 {
        return Err(ProtocolError::BadElapsed);
    }
    Ok(resp)
}
