//! Pulling programs and model documents out of raw completions.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExtractError {
    #[error("completion has no fenced code block")]
    NoCodeBlock,
}

/// A closed ``` block: byte offset of the opening fence and its content.
struct Fence<'a> {
    start: usize,
    body: &'a str,
}

const LANG_TAGS: [&str; 3] = ["python", "python3", "py"];

fn fences(text: &str) -> Vec<Fence<'_>> {
    let mut out = Vec::new();
    let mut pos = 0;
    while let Some(open) = text[pos..].find("```").map(|i| pos + i) {
        let inner_start = open + 3;
        let Some(close) = text[inner_start..].find("```").map(|i| inner_start + i) else {
            break;
        };
        out.push(Fence {
            start: open,
            body: strip_info(&text[inner_start..close]),
        });
        pos = close + 3;
    }
    out
}

/// Drops a language tag: the whole first line when it is a single token, or
/// a known tag followed by a space on one-line blocks (which are trimmed).
fn strip_info(raw: &str) -> &str {
    match raw.split_once('\n') {
        Some((first, rest)) if is_info_string(first.trim()) => rest,
        Some(_) => raw,
        None => {
            let t = raw.trim();
            LANG_TAGS
                .iter()
                .find_map(|tag| t.strip_prefix(tag).filter(|r| r.starts_with(' ')))
                .unwrap_or(t)
                .trim()
        }
    }
}

fn is_info_string(s: &str) -> bool {
    s.chars().all(|c| c.is_ascii_alphanumeric() || "+-_.".contains(c))
}

/// Splits an LG completion into `(logic_plan, program)`. The last fenced
/// block is the program; everything before its opening fence, earlier
/// blocks included, is the plan.
pub fn extract_program(completion: &str) -> Result<(String, String), ExtractError> {
    let blocks = fences(completion);
    let last = blocks.last().ok_or(ExtractError::NoCodeBlock)?;
    let program = last.body.trim_matches('\n').trim_end();
    if program.trim().is_empty() {
        return Err(ExtractError::NoCodeBlock);
    }
    Ok((completion[..last.start].trim().to_string(), program.to_string()))
}

/// The model document inside a completion: the last `<model>...</model>`
/// span if present, otherwise the whole text.
pub fn extract_model_document(completion: &str) -> &str {
    if let Some(open) = completion.rfind("<model>") {
        let inner = &completion[open + "<model>".len()..];
        if let Some(close) = inner.find("</model>") {
            return inner[..close].trim();
        }
    }
    completion.trim()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plan_then_block() {
        let (plan, prog) = extract_program("plan text\n```python\nanswer = 1+1\n```\n").unwrap();
        assert_eq!(plan, "plan text");
        assert_eq!(prog, "answer = 1+1");
    }

    #[test]
    fn inline_fence() {
        let (plan, prog) = extract_program("plan text ```python answer = 1+1 ```").unwrap();
        assert_eq!((plan.as_str(), prog.as_str()), ("plan text", "answer = 1+1"));
        let (_, prog) = extract_program("```answer = 2```").unwrap();
        assert_eq!(prog, "answer = 2");
        let (_, prog) = extract_program("```x = 1\nanswer = x```").unwrap();
        assert_eq!(prog, "x = 1\nanswer = x");
    }

    #[test]
    fn last_block_wins() {
        let text = "first idea\n```\nanswer = 1\n```\nbetter:\n```py\nanswer = 2\n```";
        let (plan, prog) = extract_program(text).unwrap();
        assert_eq!(prog, "answer = 2");
        assert_eq!(plan, "first idea\n```\nanswer = 1\n```\nbetter:");
    }

    #[test]
    fn missing_or_empty_block() {
        assert_eq!(extract_program("just prose"), Err(ExtractError::NoCodeBlock));
        assert_eq!(extract_program("```python\nanswer = 1"), Err(ExtractError::NoCodeBlock));
        assert_eq!(extract_program("```python\n\n```"), Err(ExtractError::NoCodeBlock));
    }

    #[test]
    fn model_document_span() {
        assert_eq!(extract_model_document("junk <model>\n## A\n</model> tail"), "## A");
        assert_eq!(extract_model_document("  ## A\n"), "## A");
        assert_eq!(extract_model_document("<model> unclosed"), "<model> unclosed");
    }
}
