//! Built-in mini-interpreter for a small Python subset.
//!
//! Supported: assignment and augmented assignment, int/float/bool/str/list
//! values, arithmetic with Python semantics (`/` is true division, `//` and
//! `%` floor), chained comparisons, `and`/`or`/`not`, conditional
//! expressions, single-line `while`/`if`, `print`, a handful of builtins and
//! `import math`. Imports of other modules and builtins that reach outside
//! the interpreter (`open`, `eval`, dunder names, ...) are rejected before
//! execution with `forbidden_operation`.

mod lexer;
mod parser;
mod value;

use std::collections::HashMap;
use std::time::Instant;

use self::parser::{Expr, ParseError, Stmt};
use self::value::Value;
use super::{ExecutionLimits, ExecutionResult, ExecutionStatus, Executor};

pub use self::value::format_float;

#[derive(Debug, Clone, Default)]
pub struct MiniInterpreter;

impl Executor for MiniInterpreter {
    fn name(&self) -> &str {
        "mini"
    }

    fn execute(&self, program: &str, limits: &ExecutionLimits) -> ExecutionResult {
        run(program, limits)
    }
}

enum Halt {
    Error(String),
    Forbidden(String),
    Timeout,
    OutputOverflow,
}

type Flow<T> = Result<T, Halt>;

fn err<T>(msg: impl Into<String>) -> Flow<T> {
    Err(Halt::Error(msg.into()))
}

/// Runs a program to completion or until a limit trips.
pub fn run(program: &str, limits: &ExecutionLimits) -> ExecutionResult {
    let start = Instant::now();
    let finish = |status, answer, stderr: String| ExecutionResult {
        status,
        answer,
        stderr_excerpt: super::excerpt(&stderr),
        elapsed: start.elapsed().as_secs_f64(),
    };

    let stmts = match lexer::tokenize(program)
        .map_err(ParseError::Syntax)
        .and_then(|toks| parser::parse(&toks))
    {
        Ok(s) => s,
        Err(ParseError::Syntax(msg)) => return finish(ExecutionStatus::RuntimeError, None, msg),
        Err(ParseError::Forbidden(msg)) => {
            return finish(ExecutionStatus::ForbiddenOperation, None, msg)
        }
    };

    let mut m = Machine {
        env: HashMap::new(),
        stdout: String::new(),
        deadline: start + limits.wall_timeout,
        steps: 0,
        limits,
    };
    match m.block(&stmts) {
        Ok(()) => match extract_answer(&m.stdout, m.env.get("answer")) {
            Some(answer) => finish(ExecutionStatus::Ok, Some(answer), String::new()),
            None => finish(
                ExecutionStatus::RuntimeError,
                None,
                "no answer: program neither printed a line nor bound `answer`".into(),
            ),
        },
        Err(Halt::Error(msg)) => finish(ExecutionStatus::RuntimeError, None, msg),
        Err(Halt::Forbidden(msg)) => finish(ExecutionStatus::ForbiddenOperation, None, msg),
        Err(Halt::Timeout) => finish(
            ExecutionStatus::Timeout,
            None,
            format!("timed out after {:?}", limits.wall_timeout),
        ),
        Err(Halt::OutputOverflow) => finish(
            ExecutionStatus::OutputOverflow,
            None,
            format!("output exceeded {} bytes", limits.output_cap),
        ),
    }
}

/// The final nonempty printed line wins over an `answer` binding.
fn extract_answer(stdout: &str, answer: Option<&Value>) -> Option<String> {
    stdout
        .lines()
        .rev()
        .map(str::trim)
        .find(|l| !l.is_empty())
        .map(str::to_string)
        .or_else(|| answer.map(Value::to_str))
}

struct Machine<'a> {
    env: HashMap<String, Value>,
    stdout: String,
    deadline: Instant,
    steps: u64,
    limits: &'a ExecutionLimits,
}

impl Machine<'_> {
    fn tick(&mut self) -> Flow<()> {
        self.steps += 1;
        if self.steps % 256 == 0 && Instant::now() >= self.deadline {
            return Err(Halt::Timeout);
        }
        Ok(())
    }

    fn check_size(&self, bytes: u64) -> Flow<()> {
        if bytes > self.limits.memory_cap {
            return err(format!(
                "MemoryError: value of ~{bytes} bytes exceeds the memory cap"
            ));
        }
        Ok(())
    }

    fn block(&mut self, stmts: &[Stmt]) -> Flow<()> {
        for s in stmts {
            self.stmt(s)?;
        }
        Ok(())
    }

    fn stmt(&mut self, stmt: &Stmt) -> Flow<()> {
        self.tick()?;
        match stmt {
            Stmt::Pass => {}
            Stmt::Import(modules) => {
                for m in modules {
                    let root = m.split('.').next().unwrap_or_default();
                    let name = parser::ALLOWED_MODULES
                        .iter()
                        .find(|a| **a == root)
                        .copied()
                        .ok_or_else(|| Halt::Forbidden(format!("module '{m}' is not allowed")))?;
                    self.env.insert(name.to_string(), Value::Module(name));
                }
            }
            Stmt::Assign(name, e) => {
                let v = self.eval(e)?;
                self.env.insert(name.clone(), v);
            }
            Stmt::AugAssign(name, op, e) => {
                let cur = self.lookup(name)?;
                let rhs = self.eval(e)?;
                let v = self.binary(op, cur, rhs)?;
                self.env.insert(name.clone(), v);
            }
            Stmt::Expr(e) => {
                self.eval(e)?;
            }
            Stmt::If(cond, body) => {
                if self.eval(cond)?.truthy() {
                    self.block(body)?;
                }
            }
            Stmt::While(cond, body) => {
                while self.eval(cond)?.truthy() {
                    self.tick()?;
                    self.block(body)?;
                }
            }
        }
        Ok(())
    }

    fn lookup(&self, name: &str) -> Flow<Value> {
        match self.env.get(name) {
            Some(v) => Ok(v.clone()),
            None => err(format!("NameError: name '{name}' is not defined")),
        }
    }

    fn eval(&mut self, e: &Expr) -> Flow<Value> {
        self.tick()?;
        Ok(match e {
            Expr::Int(v) => Value::Int(*v),
            Expr::Float(v) => Value::Float(*v),
            Expr::Str(s) => Value::Str(s.clone()),
            Expr::Bool(b) => Value::Bool(*b),
            Expr::None => Value::None,
            Expr::Name(n) => self.lookup(n)?,
            Expr::List(items) => {
                let mut out = Vec::with_capacity(items.len());
                for i in items {
                    out.push(self.eval(i)?);
                }
                Value::List(out)
            }
            Expr::Unary(op, inner) => {
                let v = self.eval(inner)?;
                match (*op, v) {
                    ("-", Value::Int(i)) => Value::Int(
                        i.checked_neg()
                            .ok_or_else(|| Halt::Error("OverflowError: integer overflow".into()))?,
                    ),
                    ("-", Value::Bool(b)) => Value::Int(-(b as i64)),
                    ("-", Value::Float(f)) => Value::Float(-f),
                    ("+", v @ (Value::Int(_) | Value::Float(_))) => v,
                    ("+", Value::Bool(b)) => Value::Int(b as i64),
                    (op, v) => {
                        return err(format!(
                            "TypeError: bad operand type for unary {op}: '{}'",
                            v.type_name()
                        ))
                    }
                }
            }
            Expr::Binary(op, l, r) => {
                let l = self.eval(l)?;
                let r = self.eval(r)?;
                self.binary(op, l, r)?
            }
            Expr::Compare(first, rest) => {
                let mut lhs = self.eval(first)?;
                for (op, rhs) in rest {
                    let rhs = self.eval(rhs)?;
                    if !value::compare(op, &lhs, &rhs).map_err(Halt::Error)? {
                        return Ok(Value::Bool(false));
                    }
                    lhs = rhs;
                }
                Value::Bool(true)
            }
            Expr::And(l, r) => {
                let l = self.eval(l)?;
                if l.truthy() {
                    self.eval(r)?
                } else {
                    l
                }
            }
            Expr::Or(l, r) => {
                let l = self.eval(l)?;
                if l.truthy() {
                    l
                } else {
                    self.eval(r)?
                }
            }
            Expr::Not(inner) => Value::Bool(!self.eval(inner)?.truthy()),
            Expr::IfElse {
                cond,
                then,
                otherwise,
            } => {
                if self.eval(cond)?.truthy() {
                    self.eval(then)?
                } else {
                    self.eval(otherwise)?
                }
            }
            Expr::Attr(module, field) => match self.lookup(module)? {
                Value::Module("math") => value::math_constant(field).map_err(Halt::Error)?,
                other => {
                    return err(format!(
                        "AttributeError: '{}' object has no attribute '{field}'",
                        other.type_name()
                    ))
                }
            },
            Expr::Index(target, idx) => {
                let target = self.eval(target)?;
                let idx = self.eval(idx)?;
                value::index(&target, &idx).map_err(Halt::Error)?
            }
            Expr::Call(name, args) => {
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    vals.push(self.eval(a)?);
                }
                self.call(name, vals)?
            }
        })
    }

    fn binary(&mut self, op: &str, l: Value, r: Value) -> Flow<Value> {
        if let Some(bytes) = value::repetition_size(op, &l, &r) {
            self.check_size(bytes)?;
        }
        let v = value::binary(op, l, r).map_err(Halt::Error)?;
        self.check_size(v.approx_size())?;
        Ok(v)
    }

    fn call(&mut self, name: &str, args: Vec<Value>) -> Flow<Value> {
        if name == "print" {
            let line = args.iter().map(Value::to_str).collect::<Vec<_>>().join(" ");
            if self.stdout.len() + line.len() + 1 > self.limits.output_cap as usize {
                return Err(Halt::OutputOverflow);
            }
            self.stdout.push_str(&line);
            self.stdout.push('\n');
            return Ok(Value::None);
        }
        if let Some(f) = name.strip_prefix("math.") {
            if !matches!(self.env.get("math"), Some(Value::Module("math"))) {
                return err("NameError: name 'math' is not defined");
            }
            return value::math_call(f, &args).map_err(Halt::Error);
        }
        if name == "range" {
            let (start, stop, step) = value::range_args(&args).map_err(Halt::Error)?;
            let len = value::range_len(start, stop, step);
            self.check_size(len.saturating_mul(16))?;
            let mut out = Vec::with_capacity(len as usize);
            let mut i = start;
            while (step > 0 && i < stop) || (step < 0 && i > stop) {
                self.tick()?;
                out.push(Value::Int(i));
                i += step;
            }
            return Ok(Value::List(out));
        }
        let v = value::builtin(name, &args).map_err(Halt::Error)?;
        self.check_size(v.approx_size())?;
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::time::Duration;

    fn limits() -> ExecutionLimits {
        ExecutionLimits::default()
    }

    fn ok(src: &str) -> String {
        let r = run(src, &limits());
        assert_eq!(r.status, ExecutionStatus::Ok, "{src}: {}", r.stderr_excerpt);
        r.answer.unwrap()
    }

    fn status(src: &str) -> ExecutionStatus {
        run(src, &limits()).status
    }

    #[test]
    fn arithmetic_answer() {
        assert_eq!(ok("answer = (3 + 4) * 5"), "35");
        assert_eq!(ok("answer = 6 * 7"), "42");
        assert_eq!(ok("answer = 7 / 2"), "3.5");
        assert_eq!(ok("answer = 8 / 2"), "4.0");
        assert_eq!(ok("answer = -7 // 2"), "-4");
        assert_eq!(ok("answer = -7 % 3"), "2");
        assert_eq!(ok("answer = 7 % -3"), "-2");
        assert_eq!(ok("answer = 2 ** 10"), "1024");
        assert_eq!(ok("answer = 2 ** -1"), "0.5");
        assert_eq!(ok("answer = -2 ** 2"), "-4");
        assert_eq!(ok("answer = 0.1 + 0.2"), "0.30000000000000004");
        assert_eq!(ok("answer = 1e16"), "1e+16");
        assert_eq!(ok("answer = 1 / 3"), "0.3333333333333333");
        assert_eq!(ok("answer = True + 1"), "2");
    }

    #[test]
    fn print_wins_over_answer() {
        assert_eq!(ok("answer = 8\nprint(7)"), "7");
        assert_eq!(ok("answer = 8"), "8");
        assert_eq!(ok("print('a', 1, True)\nprint('')"), "a 1 True");
        let r = run("x = 1", &limits());
        assert_eq!(r.status, ExecutionStatus::RuntimeError);
        assert!(r.stderr_excerpt.contains("no answer"));
    }

    #[test]
    fn control_flow_and_builtins() {
        assert_eq!(ok("i = 0; s = 0\nwhile i < 5: i += 1; s += i\nanswer = s"), "15");
        assert_eq!(ok("x = 3\nif x > 2: answer = 'big'"), "big");
        assert_eq!(ok("answer = 'yes' if 2 > 1 else 'no'"), "yes");
        assert_eq!(ok("answer = max(3, 9, 4) - min([5, 2])"), "7");
        assert_eq!(ok("answer = sum([1, 2, 3]) + abs(-4)"), "10");
        assert_eq!(ok("answer = sum(range(1, 11))"), "55");
        assert_eq!(ok("answer = round(2.5) + round(3.5)"), "6");
        assert_eq!(ok("answer = round(2.675, 2)"), "2.67");
        assert_eq!(ok("import math\nanswer = math.sqrt(16) + math.floor(2.7)"), "6.0");
        assert_eq!(ok("answer = 1 < 2 < 3 and not 3 < 2"), "True");
        assert_eq!(ok("answer = [1, 'a', 2.0]"), "[1, 'a', 2.0]");
        assert_eq!(ok("answer = 3 in [1, 2, 3]"), "True");
        assert_eq!(ok("answer = int('12') + int(3.9)"), "15");
        assert_eq!(ok("answer = len('abc') * 2"), "6");
    }

    #[test]
    fn errors() {
        let r = run("answer = y + 1", &limits());
        assert_eq!(r.status, ExecutionStatus::RuntimeError);
        assert!(r.stderr_excerpt.contains("NameError"), "{}", r.stderr_excerpt);
        assert_eq!(status("answer = 1 / 0"), ExecutionStatus::RuntimeError);
        assert_eq!(status("answer = 'a' + 1"), ExecutionStatus::RuntimeError);
        assert_eq!(status("answer = (1"), ExecutionStatus::RuntimeError);
        assert_eq!(status("answer = 9223372036854775807 + 1"), ExecutionStatus::RuntimeError);
        assert_eq!(status("x = 'a' * 10**12"), ExecutionStatus::RuntimeError);
    }

    #[test]
    fn forbidden() {
        for src in [
            "import os\nanswer = 1",
            "import socket",
            "import subprocess",
            "f = open('/etc/passwd')",
            "answer = __import__('os')",
            "answer = eval('1')",
        ] {
            assert_eq!(status(src), ExecutionStatus::ForbiddenOperation, "{src}");
        }
    }

    #[test]
    fn output_cap() {
        let l = ExecutionLimits {
            output_cap: 64,
            ..limits()
        };
        let r = run("while True: print('xxxxxxxxxxxxxxxx')", &l);
        assert_eq!(r.status, ExecutionStatus::OutputOverflow);
    }

    #[test]
    fn infinite_loop_times_out() {
        let l = ExecutionLimits {
            wall_timeout: Duration::from_millis(200),
            ..limits()
        };
        let r = run("while True: pass", &l);
        assert_eq!(r.status, ExecutionStatus::Timeout);
        assert!(r.elapsed < 1.2);
        assert!(r.answer.is_none());
    }
}
