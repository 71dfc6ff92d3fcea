use std::collections::BTreeMap;

use super::serialize::{split_unescaped_pipe, unescape_field};
use super::{
    check, ConstraintExpr, FormalModel, IdentifierOptions, LineMap, ModelType, Objective,
    ObjectiveKind, SchemaViolation, Section, VariableDecl, ViolationCode,
};

/// Parses a tagged document with the default identifier allowlist.
pub fn parse_model(document: &str) -> Result<FormalModel, Vec<SchemaViolation>> {
    parse_model_with(document, &IdentifierOptions::default())
}

/// Parses a tagged document. Every detectable problem is reported, not just
/// the first.
///
/// Accepted beyond the canonical form: sections in any order, `#`/`###`
/// headers with an optional trailing colon, `*` and `1.` bullets, blank
/// lines, and an enclosing `<model>` ... `</model>` pair.
pub fn parse_model_with(
    document: &str,
    opts: &IdentifierOptions,
) -> Result<FormalModel, Vec<SchemaViolation>> {
    use ViolationCode::*;
    let mut violations = Vec::new();

    let mut lines: Vec<(usize, &str)> = document
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .collect();
    unwrap_model_tags(&mut lines, &mut violations);

    let mut sections: BTreeMap<Section, (usize, Vec<(usize, &str)>)> = BTreeMap::new();
    let mut current: Option<Section> = None;
    // Body lines of an unknown or repeated section are reported once, at the header.
    let mut skipping = false;
    for (lineno, line) in lines {
        if let Some(tag) = header_tag(line) {
            match Section::from_tag(tag) {
                Some(section) if sections.contains_key(&section) => {
                    violations.push(SchemaViolation::new(
                        MalformedDocument,
                        Some(section),
                        Some(lineno),
                        format!("section {section} appears more than once"),
                    ));
                    current = None;
                    skipping = true;
                }
                Some(section) => {
                    sections.insert(section, (lineno, Vec::new()));
                    current = Some(section);
                    skipping = false;
                }
                None => {
                    violations.push(SchemaViolation::new(
                        MalformedDocument,
                        current,
                        Some(lineno),
                        format!("unknown section tag {:?}", tag),
                    ));
                    current = None;
                    skipping = true;
                }
            }
            continue;
        }
        match current {
            Some(section) => sections.get_mut(&section).unwrap().1.push((lineno, line)),
            None if skipping || line.trim().is_empty() => {}
            None => violations.push(SchemaViolation::new(
                MalformedDocument,
                None,
                Some(lineno),
                "text outside of any section",
            )),
        }
    }

    for section in Section::ALL {
        if !sections.contains_key(&section) {
            violations.push(SchemaViolation::new(
                MissingSection,
                Some(section),
                None,
                format!("section {section} is missing"),
            ));
        }
    }

    let mut map = LineMap {
        objectives_missing: !sections.contains_key(&Section::Objectives),
        objectives_header: sections.get(&Section::Objectives).map(|(l, _)| *l),
        ..LineMap::default()
    };
    let body = |s: Section| sections.get(&s).map(|(_, b)| b.as_slice()).unwrap_or(&[]);

    let overview = body(Section::Overview)
        .iter()
        .map(|(_, l)| l.strip_prefix('\\').unwrap_or(l))
        .collect::<Vec<_>>()
        .join("\n")
        .trim()
        .to_string();

    let mut model_type = ModelType::Other(String::new());
    if let Some((header, type_body)) = sections.get(&Section::Type) {
        let entries: Vec<_> = nonblank(type_body).collect();
        match entries.as_slice() {
            [(lineno, text)] => {
                map.type_line = Some(*lineno);
                model_type = ModelType::parse_label(&unescape_field(strip_bullet(text).trim()));
            }
            [] => violations.push(SchemaViolation::new(
                MalformedDocument,
                Some(Section::Type),
                Some(*header),
                "TYPE section is empty",
            )),
            [_, (lineno, _), ..] => violations.push(SchemaViolation::new(
                MalformedDocument,
                Some(Section::Type),
                Some(*lineno),
                "TYPE section must hold exactly one label",
            )),
        }
    }

    let mut variables = Vec::new();
    for (lineno, line) in nonblank(body(Section::Variables)) {
        let item = strip_bullet(line);
        let Some((name, rest)) = item.split_once(':') else {
            violations.push(SchemaViolation::new(
                MalformedDocument,
                Some(Section::Variables),
                Some(lineno),
                "variable declaration must be `name: domain`",
            ));
            continue;
        };
        let (domain, note) = split_unescaped_pipe(rest);
        variables.push(VariableDecl {
            name: name.trim().to_string(),
            domain: unescape_field(domain.trim()),
            note: note.map(|n| unescape_field(n.trim())),
        });
        map.variables.push(lineno);
    }

    let mut constraints = Vec::new();
    for (lineno, line) in nonblank(body(Section::Constraints)) {
        let text = unescape_field(strip_bullet(line).trim());
        constraints.push(ConstraintExpr::with_options(
            constraints.len() + 1,
            text,
            opts,
        ));
        map.constraints.push(lineno);
    }

    let mut objectives = Vec::new();
    for (lineno, line) in nonblank(body(Section::Objectives)) {
        objectives.push(parse_objective(strip_bullet(line).trim()));
        map.objectives.push(lineno);
    }

    let model = FormalModel {
        overview,
        model_type,
        variables,
        constraints,
        objectives,
    };
    violations.extend(check(&model, &map));
    if violations.is_empty() {
        Ok(model)
    } else {
        Err(violations)
    }
}

fn unwrap_model_tags(lines: &mut Vec<(usize, &str)>, violations: &mut Vec<SchemaViolation>) {
    let first = lines.iter().position(|(_, l)| !l.trim().is_empty());
    let last = lines.iter().rposition(|(_, l)| !l.trim().is_empty());
    let (Some(first), Some(last)) = (first, last) else {
        return;
    };
    let opens = lines[first].1.trim().eq_ignore_ascii_case("<model>");
    let closes = lines[last].1.trim().eq_ignore_ascii_case("</model>");
    match (opens, closes) {
        (true, true) if first < last => {
            lines.truncate(last);
            lines.drain(..=first);
        }
        (false, false) => {}
        (true, _) => {
            violations.push(SchemaViolation::new(
                ViolationCode::MalformedDocument,
                None,
                Some(lines[first].0),
                "unbalanced <model> tag",
            ));
            lines.drain(..=first);
        }
        (false, true) => {
            violations.push(SchemaViolation::new(
                ViolationCode::MalformedDocument,
                None,
                Some(lines[last].0),
                "unbalanced </model> tag",
            ));
            lines.truncate(last);
        }
    }
}

fn header_tag(line: &str) -> Option<&str> {
    let hashes = line.len() - line.trim_start_matches('#').len();
    if hashes == 0 || hashes > 6 {
        return None;
    }
    let tag = line[hashes..].trim();
    Some(tag.strip_suffix(':').unwrap_or(tag).trim_end())
}

fn nonblank<'a>(body: &'a [(usize, &'a str)]) -> impl Iterator<Item = (usize, &'a str)> + 'a {
    body.iter()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| (*n, *l))
}

fn strip_bullet(line: &str) -> &str {
    let t = line.trim_start();
    if t == "-" || t == "*" {
        return "";
    }
    for bullet in ["- ", "* ", "-\t", "*\t"] {
        if let Some(rest) = t.strip_prefix(bullet) {
            return rest;
        }
    }
    let digits = t.len() - t.trim_start_matches(|c: char| c.is_ascii_digit()).len();
    if digits > 0 {
        let rest = &t[digits..];
        for sep in [". ", ") "] {
            if let Some(rest) = rest.strip_prefix(sep) {
                return rest;
            }
        }
    }
    t
}

fn parse_objective(item: &str) -> Objective {
    if let Some((word, rest)) = item.split_once(':') {
        if let Some(kind) = ObjectiveKind::from_keyword(word) {
            return Objective::new(kind, unescape_field(rest.trim()));
        }
    }
    let first_word = item.split_whitespace().next().unwrap_or("");
    let kind = ObjectiveKind::from_keyword(first_word).unwrap_or(ObjectiveKind::Compute);
    Objective::new(kind, unescape_field(item))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::serialize;

    const DOC: &str = "## OVERVIEW\nTwo digits sum to ten.\n## TYPE\nCSP\n## VARIABLES\n\
                       - x: int\n- y: int\n## CONSTRAINTS\n- x + y == 10\n\
                       ## OBJECTIVES\n- compute: calculate x\n";

    #[test]
    fn parses_reference_document() {
        let m = parse_model(DOC).unwrap();
        assert_eq!(m.variables.len(), 2);
        assert_eq!(m.constraints.len(), 1);
        assert_eq!(m.objectives.len(), 1);
        assert_eq!(m.model_type, ModelType::Csp);
        assert_eq!(serialize(&m), DOC);
    }

    #[test]
    fn missing_objectives_section() {
        let doc = DOC.split("## OBJECTIVES").next().unwrap();
        let v = parse_model(doc).unwrap_err();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].code, ViolationCode::MissingSection);
        assert_eq!(v[0].location.section, Some(Section::Objectives));
    }

    #[test]
    fn duplicate_variable_has_line() {
        let doc = DOC.replace("- y: int", "- x: boolean");
        let v = parse_model(&doc).unwrap_err();
        assert_eq!(v.len(), 2, "{v:?}");
        assert!(v.iter().any(|v| v.code == ViolationCode::DuplicateVariable
            && v.subject.as_deref() == Some("x")
            && v.location.line == Some(7)));
        assert!(v.iter().any(|v| v.code == ViolationCode::UnknownVariableRef));
    }

    #[test]
    fn unbalanced_wrapper_is_malformed() {
        let v = parse_model(&format!("<model>\n{DOC}")).unwrap_err();
        assert_eq!(v[0].code, ViolationCode::MalformedDocument);
        assert!(parse_model(&format!("<model>\n{DOC}</model>\n")).is_ok());
    }

    #[test]
    fn lenient_bullets_and_headers() {
        let doc = "# Overview:\nsum\n### type\narithmetic\n## VARIABLES\n1. a: int\n\
                   * b: int\n## CONSTRAINTS\na < b\n## OBJECTIVES\ncalculate `a`\n";
        let m = parse_model(doc).unwrap();
        assert_eq!(m.variables[1].name, "b");
        assert_eq!(m.constraints[0].text, "a < b");
        assert_eq!(m.objectives[0].kind, ObjectiveKind::Compute);
        assert_eq!(m.objectives[0].text, "calculate `a`");
    }

    #[test]
    fn empty_objectives_section_is_empty_objective() {
        let doc = DOC.replace("- compute: calculate x\n", "");
        let v = parse_model(&doc).unwrap_err();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].code, ViolationCode::EmptyObjective);
    }

    #[test]
    fn unknown_section_and_stray_text() {
        let doc = format!("preamble\n{DOC}## NOTES\nhello\n");
        let v = parse_model(&doc).unwrap_err();
        assert_eq!(v.len(), 2);
        assert!(v.iter().all(|v| v.code == ViolationCode::MalformedDocument));
    }

    #[test]
    fn overview_lines_starting_with_hash_round_trip() {
        let mut m = parse_model(DOC).unwrap();
        m.overview = "# not a header\n\\ backslash".into();
        assert_eq!(parse_model(&serialize(&m)).unwrap(), m);
    }
}
