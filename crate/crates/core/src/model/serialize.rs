use std::fmt::Write;

use super::{FormalModel, Section};

/// Canonical tagged-text form: fixed section order, one declaration per
/// line, every section present even when empty, trailing newline.
pub fn serialize(model: &FormalModel) -> String {
    let mut out = String::new();
    header(&mut out, Section::Overview);
    for line in model.overview.trim().lines() {
        if line.starts_with('#') || line.starts_with('\\') {
            out.push('\\');
        }
        out.push_str(line);
        out.push('\n');
    }

    header(&mut out, Section::Type);
    out.push_str(&escape_field(&model.model_type.label()));
    out.push('\n');

    header(&mut out, Section::Variables);
    for var in &model.variables {
        write!(out, "- {}:", var.name).unwrap();
        if !var.domain.is_empty() {
            write!(out, " {}", escape_field(&var.domain)).unwrap();
        }
        if let Some(note) = &var.note {
            write!(out, " | {}", escape_field(note)).unwrap();
        }
        out.push('\n');
    }

    header(&mut out, Section::Constraints);
    for c in &model.constraints {
        writeln!(out, "- {}", escape_field(&c.text)).unwrap();
    }

    header(&mut out, Section::Objectives);
    for o in &model.objectives {
        write!(out, "- {}:", o.kind.keyword()).unwrap();
        if !o.text.is_empty() {
            write!(out, " {}", escape_field(&o.text)).unwrap();
        }
        out.push('\n');
    }
    out
}

fn header(out: &mut String, section: Section) {
    writeln!(out, "## {}", section.tag()).unwrap();
}

pub(super) fn escape_field(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '|' => out.push_str("\\|"),
            c => out.push(c),
        }
    }
    out
}

pub(super) fn unescape_field(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('n') => out.push('\n'),
            Some('|') => out.push('|'),
            Some(other) => {
                out.push('\\');
                out.push(other);
            }
            None => out.push('\\'),
        }
    }
    out
}

/// Splits at the first `|` not preceded by an escape.
pub(super) fn split_unescaped_pipe(s: &str) -> (&str, Option<&str>) {
    let mut escaped = false;
    for (i, c) in s.char_indices() {
        match c {
            '\\' if !escaped => escaped = true,
            '|' if !escaped => return (&s[..i], Some(&s[i + 1..])),
            _ => escaped = false,
        }
    }
    (s, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::*;

    #[test]
    fn empty_constraints_section_is_present() {
        let m = FormalModel {
            overview: "o".into(),
            model_type: ModelType::Arithmetic,
            variables: vec![VariableDecl::new("x", "integer")],
            constraints: vec![],
            objectives: vec![Objective::new(ObjectiveKind::Compute, "calculate `x`")],
        };
        let doc = serialize(&m);
        assert_eq!(
            doc,
            "## OVERVIEW\no\n## TYPE\narithmetic\n## VARIABLES\n- x: integer\n\
             ## CONSTRAINTS\n## OBJECTIVES\n- compute: calculate `x`\n"
        );
    }

    #[test]
    fn escapes_are_reversible() {
        for s in ["a|b", "back\\slash", "two\nlines", "\\|", "plain"] {
            assert_eq!(unescape_field(&escape_field(s)), s);
        }
        assert_eq!(split_unescaped_pipe(r"a\|b | c"), (r"a\|b ", Some(" c")));
    }
}
