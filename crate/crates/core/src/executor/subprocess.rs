use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use super::protocol::{decode_response, encode_request, RunnerRequest};
use super::{ExecutionLimits, ExecutionResult, ExecutionStatus, Executor};

/// Extra wait beyond the program timeout before the runner is killed.
const GRACE: Duration = Duration::from_millis(750);

/// Adapter to an external runner process speaking the JSON-line protocol.
///
/// Keeps a pool of idle runners; a runner serves one request at a time, so
/// concurrent callers each get their own process. A runner that times out,
/// dies, or answers out of protocol is killed and replaced on next use.
pub struct SubprocessExecutor {
    command: Vec<String>,
    idle: Mutex<Vec<Runner>>,
    next_id: AtomicU64,
}

struct Runner {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<String>,
}

impl Runner {
    fn spawn(command: &[String]) -> std::io::Result<Runner> {
        let (program, args) = command
            .split_first()
            .ok_or_else(|| std::io::Error::new(std::io::ErrorKind::InvalidInput, "empty runner command"))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, lines) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let Ok(line) = line else { break };
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(Runner { child, stdin, lines })
    }
}

impl Drop for Runner {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

impl SubprocessExecutor {
    /// `command` is the runner's argv, e.g. `["python3", "-m", "runner"]`.
    pub fn new(command: Vec<String>) -> Self {
        SubprocessExecutor {
            command,
            idle: Mutex::new(Vec::new()),
            next_id: AtomicU64::new(1),
        }
    }

    fn checkout(&self) -> std::io::Result<Runner> {
        if let Some(r) = self.idle.lock().unwrap().pop() {
            return Ok(r);
        }
        Runner::spawn(&self.command)
    }

    fn checkin(&self, runner: Runner) {
        self.idle.lock().unwrap().push(runner);
    }
}

impl Executor for SubprocessExecutor {
    fn name(&self) -> &str {
        "subprocess"
    }

    fn execute(&self, program: &str, limits: &ExecutionLimits) -> ExecutionResult {
        let start = Instant::now();
        let fail = |status, msg: String| ExecutionResult::failure(status, msg, start.elapsed().as_secs_f64());
        let mut runner = match self.checkout() {
            Ok(r) => r,
            Err(e) => return fail(ExecutionStatus::RuntimeError, format!("cannot start runner: {e}")),
        };
        let id = self.next_id.fetch_add(1, Ordering::Relaxed);
        let line = encode_request(&RunnerRequest::new(id, program, limits));
        if let Err(e) = runner.stdin.write_all(line.as_bytes()).and_then(|_| runner.stdin.flush()) {
            return fail(ExecutionStatus::RuntimeError, format!("runner stdin closed: {e}"));
        }
        let reply = match runner.lines.recv_timeout(limits.wall_timeout + GRACE) {
            Ok(reply) => reply,
            Err(RecvTimeoutError::Timeout) => {
                return fail(ExecutionStatus::Timeout, "runner did not answer in time; killed".into())
            }
            Err(RecvTimeoutError::Disconnected) => {
                return fail(ExecutionStatus::RuntimeError, "runner exited unexpectedly".into())
            }
        };
        let resp = match decode_response(&reply) {
            Ok(r) => r,
            Err(e) => return fail(ExecutionStatus::RuntimeError, format!("protocol error: {e}")),
        };
        if resp.id != Some(id) {
            return fail(
                ExecutionStatus::RuntimeError,
                format!("protocol error: expected id {id}, got {:?}", resp.id),
            );
        }
        self.checkin(runner);
        let elapsed = start.elapsed().as_secs_f64();
        match resp.answer {
            Some(a) if a.len() as u64 > limits.output_cap => {
                ExecutionResult::failure(ExecutionStatus::OutputOverflow, "answer exceeds output cap", elapsed)
            }
            Some(a) => ExecutionResult {
                status: ExecutionStatus::Ok,
                answer: Some(a),
                stderr_excerpt: super::excerpt(&resp.stderr),
                elapsed,
            },
            None => ExecutionResult::failure(resp.status, &resp.stderr, elapsed),
        }
    }
}
