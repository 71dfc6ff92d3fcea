use std::collections::BTreeSet;

/// Function names and keywords that are never treated as variable references.
pub const DEFAULT_ALLOWLIST: &[&str] = &[
    "abs", "min", "max", "sum", "and", "or", "not", "in", "if", "else", "True", "False", "true",
    "false",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdentifierOptions {
    pub allowlist: BTreeSet<String>,
}

impl Default for IdentifierOptions {
    fn default() -> Self {
        IdentifierOptions {
            allowlist: DEFAULT_ALLOWLIST.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl IdentifierOptions {
    pub fn with_allowlist<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        IdentifierOptions {
            allowlist: names.into_iter().map(Into::into).collect(),
        }
    }
}

/// Letters, digits and underscore; must start with an ASCII letter.
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Identifier-shaped tokens of an expression, minus the allowlist.
///
/// Numeric literals (including `1e5`, `0x1F`) and quoted strings are skipped.
pub fn extract_identifiers(text: &str, opts: &IdentifierOptions) -> BTreeSet<String> {
    let bytes = text.as_bytes();
    let mut out = BTreeSet::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        if b == b'"' || b == b'\'' {
            i += 1;
            while i < bytes.len() && bytes[i] != b {
                if bytes[i] == b'\\' {
                    i += 1;
                }
                i += 1;
            }
            i += 1;
        } else if b.is_ascii_digit() || b == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)
        {
            while i < bytes.len() && is_word_byte(bytes[i]) || i < bytes.len() && bytes[i] == b'.' {
                i += 1;
            }
        } else if is_word_byte(b) {
            let start = i;
            while i < bytes.len() && is_word_byte(bytes[i]) {
                i += 1;
            }
            let tok = &text[start..i];
            if is_identifier(tok) && !opts.allowlist.contains(tok) {
                out.insert(tok.to_string());
            }
        } else {
            i += 1;
        }
    }
    out
}

fn is_word_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_'
}
