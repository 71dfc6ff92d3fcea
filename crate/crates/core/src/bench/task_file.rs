use std::collections::HashSet;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::executor::{normalize_answer, AnswerKind};
use crate::orchestrator::Query;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("task file invalid at line {line}: {reason}")]
pub struct TaskFileInvalid {
    /// 1-based; 0 when the file itself could not be read.
    pub line: usize,
    pub reason: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TaskRecord {
    id: String,
    question: String,
    #[serde(default)]
    instruction: String,
    gold_answer: Option<String>,
    answer_kind: Option<AnswerKind>,
}

/// Parses JSON-lines task records. Blank lines are skipped. Every record
/// needs a unique id, a question, an answer kind, and a gold answer
/// readable as that kind.
pub fn parse_task_file(text: &str) -> Result<Vec<Query>, TaskFileInvalid> {
    parse_records(text, true)
}

/// Like [`parse_task_file`] but `answer_kind` may be omitted, as in seed
/// corpora for dataset building.
pub fn parse_seed_corpus(text: &str) -> Result<Vec<Query>, TaskFileInvalid> {
    parse_records(text, false)
}

fn parse_records(text: &str, require_kind: bool) -> Result<Vec<Query>, TaskFileInvalid> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let bad = |reason: String| TaskFileInvalid { line, reason };
        let rec: TaskRecord = serde_json::from_str(raw).map_err(|e| bad(e.to_string()))?;
        if rec.id.trim().is_empty() {
            return Err(bad("empty id".into()));
        }
        if !seen.insert(rec.id.clone()) {
            return Err(bad(format!("duplicate id {:?}", rec.id)));
        }
        let gold = rec
            .gold_answer
            .filter(|g| !g.trim().is_empty())
            .ok_or_else(|| bad(format!("record {:?} has no gold answer", rec.id)))?;
        if require_kind && rec.answer_kind.is_none() {
            return Err(bad(format!("record {:?} has no answer_kind", rec.id)));
        }
        normalize_answer(&gold, rec.answer_kind).map_err(|e| bad(e.to_string()))?;
        let query = Query {
            id: rec.id,
            question: rec.question,
            instruction: rec.instruction,
            gold_answer: Some(gold),
            answer_kind: rec.answer_kind,
        };
        query.validate().map_err(bad)?;
        out.push(query);
    }
    Ok(out)
}

fn read(path: &Path) -> Result<String, TaskFileInvalid> {
    std::fs::read_to_string(path).map_err(|e| TaskFileInvalid {
        line: 0,
        reason: format!("{}: {e}", path.display()),
    })
}

pub fn load_task_file(path: &Path) -> Result<Vec<Query>, TaskFileInvalid> {
    parse_task_file(&read(path)?)
}

pub fn load_seed_corpus(path: &Path) -> Result<Vec<Query>, TaskFileInvalid> {
    parse_seed_corpus(&read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = r#"{"id":"a","question":"1+1?","gold_answer":"2","answer_kind":"number"}

{"id":"b","question":"Is it?","instruction":"yes or no","gold_answer":"yes","answer_kind":"boolean"}
"#;

    #[test]
    fn parses_records() {
        let qs = parse_task_file(GOOD).unwrap();
        assert_eq!(qs.len(), 2);
        assert_eq!(qs[1].instruction, "yes or no");
        assert_eq!(qs[1].answer_kind, Some(AnswerKind::Boolean));
    }

    #[test]
    fn rejects_bad_records() {
        let dup = format!("{GOOD}{}", r#"{"id":"a","question":"x","gold_answer":"1","answer_kind":"number"}"#);
        assert_eq!(parse_task_file(&dup).unwrap_err().line, 4);
        let no_gold = r#"{"id":"a","question":"x","answer_kind":"number"}"#;
        assert!(parse_task_file(no_gold).unwrap_err().reason.contains("gold"));
        let bad_kind = r#"{"id":"a","question":"x","gold_answer":"1","answer_kind":"integer"}"#;
        assert!(parse_task_file(bad_kind).is_err());
        let unreadable_gold = r#"{"id":"a","question":"x","gold_answer":"many","answer_kind":"number"}"#;
        assert!(parse_task_file(unreadable_gold).is_err());
        assert!(parse_task_file("not json").is_err());
        let no_kind = r#"{"id":"a","question":"x","gold_answer":"1"}"#;
        assert!(parse_task_file(no_kind).is_err());
        assert_eq!(parse_seed_corpus(no_kind).unwrap()[0].answer_kind, None);
    }
}
