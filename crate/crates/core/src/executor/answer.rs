use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative tolerance for numeric answer comparison.
pub const DEFAULT_TOLERANCE: f64 = 1e-6;
const ABSOLUTE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnswerKind {
    Number,
    Boolean,
    ChoiceLabel,
    String,
}

impl fmt::Display for AnswerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AnswerKind::Number => "number",
            AnswerKind::Boolean => "boolean",
            AnswerKind::ChoiceLabel => "choice-label",
            AnswerKind::String => "string",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum CanonicalAnswer {
    Number(f64),
    Boolean(bool),
    ChoiceLabel(String),
    String(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnswerError {
    #[error("cannot read {raw:?} as {kind}")]
    Unparseable { kind: AnswerKind, raw: String },
}

impl CanonicalAnswer {
    pub fn kind(&self) -> AnswerKind {
        match self {
            CanonicalAnswer::Number(_) => AnswerKind::Number,
            CanonicalAnswer::Boolean(_) => AnswerKind::Boolean,
            CanonicalAnswer::ChoiceLabel(_) => AnswerKind::ChoiceLabel,
            CanonicalAnswer::String(_) => AnswerKind::String,
        }
    }

    /// Text that normalizes back to this value.
    pub fn render(&self) -> String {
        match self {
            CanonicalAnswer::Number(x) => {
                if x.fract() == 0.0 && x.abs() < 1e15 {
                    format!("{}", *x as i64)
                } else {
                    format!("{x}")
                }
            }
            CanonicalAnswer::Boolean(b) => b.to_string(),
            CanonicalAnswer::ChoiceLabel(l) => format!("({l})"),
            CanonicalAnswer::String(s) => s.clone(),
        }
    }
}

impl fmt::Display for CanonicalAnswer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// Normalizes a raw answer. With `expected` given the text must coerce to
/// that kind; without it the kind is inferred (number, then boolean, then a
/// parenthesized choice label, else string).
pub fn normalize_answer(
    raw: &str,
    expected: Option<AnswerKind>,
) -> Result<CanonicalAnswer, AnswerError> {
    let cleaned = clean(raw);
    let fail = |kind| AnswerError::Unparseable {
        kind,
        raw: raw.to_string(),
    };
    match expected {
        Some(AnswerKind::Number) => parse_number(cleaned)
            .map(CanonicalAnswer::Number)
            .ok_or_else(|| fail(AnswerKind::Number)),
        Some(AnswerKind::Boolean) => parse_bool(cleaned)
            .map(CanonicalAnswer::Boolean)
            .ok_or_else(|| fail(AnswerKind::Boolean)),
        Some(AnswerKind::ChoiceLabel) => parse_choice(cleaned, true)
            .map(CanonicalAnswer::ChoiceLabel)
            .ok_or_else(|| fail(AnswerKind::ChoiceLabel)),
        Some(AnswerKind::String) => Ok(CanonicalAnswer::String(normalize_text(cleaned))),
        None => Ok(parse_number(cleaned)
            .map(CanonicalAnswer::Number)
            .or_else(|| parse_bool(cleaned).map(CanonicalAnswer::Boolean))
            .or_else(|| parse_choice(cleaned, false).map(CanonicalAnswer::ChoiceLabel))
            .unwrap_or_else(|| CanonicalAnswer::String(normalize_text(cleaned)))),
    }
}

/// Symmetric, reflexive equality; numbers compare with relative tolerance
/// `tol` and an absolute floor of 1e-9. Different kinds never match.
pub fn answers_match(a: &CanonicalAnswer, b: &CanonicalAnswer, tol: f64) -> bool {
    use CanonicalAnswer::*;
    match (a, b) {
        (Number(x), Number(y)) => {
            let scale = x.abs().max(y.abs());
            (x - y).abs() <= (tol * scale).max(ABSOLUTE_FLOOR)
        }
        (Boolean(x), Boolean(y)) => x == y,
        (ChoiceLabel(x), ChoiceLabel(y)) => x == y,
        (String(x), String(y)) => x == y,
        _ => false,
    }
}

fn clean(raw: &str) -> &str {
    raw.trim_start()
        .trim_end_matches(|c: char| c.is_whitespace() || matches!(c, '.' | '!' | '。'))
}

fn parse_number(s: &str) -> Option<f64> {
    let mut t = s.trim();
    t = t.strip_prefix('$').unwrap_or(t).trim();
    t = t.strip_suffix('%').unwrap_or(t).trim();
    if t.is_empty() {
        return None;
    }
    if let Some((num, den)) = t.split_once('/') {
        let (n, d) = (parse_plain_number(num.trim())?, parse_plain_number(den.trim())?);
        if d == 0.0 {
            return None;
        }
        return finite(n / d);
    }
    parse_plain_number(t)
}

fn parse_plain_number(t: &str) -> Option<f64> {
    // reject words like "inf"/"nan" that f64::from_str would take
    if !t.bytes().any(|b| b.is_ascii_digit())
        || t.bytes().any(|b| b.is_ascii_alphabetic() && b != b'e' && b != b'E')
    {
        return None;
    }
    let t = strip_thousands(t)?;
    finite(t.parse::<f64>().ok()? + 0.0)
}

/// Drops `,` separators only when they sit between groups of three digits.
fn strip_thousands(t: &str) -> Option<String> {
    if !t.contains(',') {
        return Some(t.to_string());
    }
    let unsigned = t.trim_start_matches(['-', '+']);
    let int_part = unsigned.split('.').next().unwrap_or("");
    let groups: Vec<&str> = int_part.split(',').collect();
    let ok = !groups[0].is_empty()
        && groups[0].len() <= 3
        && groups[1..].iter().all(|g| g.len() == 3)
        && groups.iter().all(|g| g.bytes().all(|b| b.is_ascii_digit()));
    ok.then(|| t.replace(',', ""))
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.to_ascii_lowercase().as_str() {
        "true" | "yes" | "correct" => Some(true),
        "false" | "no" | "incorrect" => Some(false),
        _ => None,
    }
}

/// With `lenient`, accepts bare letters, `B)`, `option B` and `(B) text`;
/// otherwise only the bracketed `(B)` / `[B]` forms.
fn parse_choice(s: &str, lenient: bool) -> Option<String> {
    let letter = |t: &str| -> Option<String> {
        let mut chars = t.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) if c.is_ascii_alphabetic() => Some(c.to_ascii_uppercase().to_string()),
            _ => None,
        }
    };
    for (open, close) in [('(', ')'), ('[', ']')] {
        if let Some(inner) = s.strip_prefix(open) {
            if let Some((label, rest)) = inner.split_once(close) {
                if lenient || rest.trim().is_empty() {
                    return letter(label.trim());
                }
            }
        }
    }
    if !lenient {
        return None;
    }
    let lower = s.to_ascii_lowercase();
    let t = ["option ", "choice ", "answer "]
        .iter()
        .find_map(|p| lower.strip_prefix(p).map(|_| s[p.len()..].trim()))
        .unwrap_or(s);
    let t = t.strip_suffix(')').unwrap_or(t).trim();
    letter(t)
}

fn normalize_text(s: &str) -> String {
    s.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(raw: &str, k: Option<AnswerKind>) -> CanonicalAnswer {
        normalize_answer(raw, k).unwrap()
    }

    #[test]
    fn interleaved_trailing_punctuation_strips_fully() {
        assert_eq!(n(".\n.", None), CanonicalAnswer::String(String::new()));
        assert_eq!(n("done. !", None), n("done", None));
    }

    #[test]
    fn numbers() {
        assert_eq!(n("  42.0\n", Some(AnswerKind::Number)), n("42", None));
        assert_eq!(n("1,234", None), CanonicalAnswer::Number(1234.0));
        assert_eq!(n("$5.50", None), CanonicalAnswer::Number(5.5));
        assert_eq!(n("3/4", None), CanonicalAnswer::Number(0.75));
        assert_eq!(n("-0", None), CanonicalAnswer::Number(0.0));
        assert_eq!(n("1,23", None), CanonicalAnswer::String("1,23".into()));
        assert!(normalize_answer("inf", Some(AnswerKind::Number)).is_err());
        assert!(normalize_answer("banana", Some(AnswerKind::Number)).is_err());
    }

    #[test]
    fn booleans() {
        assert_eq!(n("Yes.", None), CanonicalAnswer::Boolean(true));
        assert_eq!(n("no", None), CanonicalAnswer::Boolean(false));
        assert_eq!(n("True", Some(AnswerKind::Boolean)), CanonicalAnswer::Boolean(true));
        assert!(normalize_answer("maybe", Some(AnswerKind::Boolean)).is_err());
    }

    #[test]
    fn choices() {
        let b = CanonicalAnswer::ChoiceLabel("B".into());
        assert_eq!(n("(B)", Some(AnswerKind::ChoiceLabel)), b);
        assert_eq!(n("(b)", None), b);
        assert_eq!(n("b", Some(AnswerKind::ChoiceLabel)), b);
        assert_eq!(n("Option B", Some(AnswerKind::ChoiceLabel)), b);
        assert_eq!(n("(B) 42 apples", Some(AnswerKind::ChoiceLabel)), b);
        assert_eq!(n("B", None), CanonicalAnswer::String("b".into()));
    }

    #[test]
    fn matching() {
        let third_a = n("0.3333333333", None);
        let third_b = n("0.333333333333", None);
        assert!(answers_match(&third_a, &third_b, DEFAULT_TOLERANCE));
        assert!(!answers_match(
            &CanonicalAnswer::Boolean(true),
            &CanonicalAnswer::ChoiceLabel("B".into()),
            DEFAULT_TOLERANCE
        ));
        assert!(!answers_match(&n("100.0", None), &n("100.2", None), DEFAULT_TOLERANCE));
        assert!(answers_match(&n("0", None), &n("1e-10", None), DEFAULT_TOLERANCE));
    }

    #[test]
    fn render_round_trips() {
        for raw in ["42", "2.5", "1e20", "(C)", "yes", "Hello  World"] {
            let a = n(raw, None);
            assert_eq!(n(&a.render(), None), a, "{raw}");
        }
    }
}
