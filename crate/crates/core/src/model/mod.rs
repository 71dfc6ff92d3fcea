//! The five-tuple formal model emitted by the formalization stage.
//!
//! A model is `(overview, model_type, variables, constraints, objectives)`.
//! It travels between stages as a line-oriented tagged document:
//!
//! ```text
//! ## OVERVIEW
//! Two digits sum to ten.
//! ## TYPE
//! CSP
//! ## VARIABLES
//! - x: integer 0..9
//! - y: integer 0..9 | the units digit
//! ## CONSTRAINTS
//! - x + y == 10
//! ## OBJECTIVES
//! - compute: calculate `x`
//! ```
//!
//! Constraints are opaque expression strings; the identifiers they mention are
//! extracted and checked against the declared variables. Objectives are free
//! text and reference variables explicitly with backticks.

mod ident;
mod parse;
mod serialize;

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

pub use ident::{extract_identifiers, is_identifier, IdentifierOptions, DEFAULT_ALLOWLIST};
pub use parse::{parse_model, parse_model_with};
pub use serialize::serialize;

/// Section tags, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Section {
    Overview,
    Type,
    Variables,
    Constraints,
    Objectives,
}

impl Section {
    pub const ALL: [Section; 5] = [
        Section::Overview,
        Section::Type,
        Section::Variables,
        Section::Constraints,
        Section::Objectives,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Section::Overview => "OVERVIEW",
            Section::Type => "TYPE",
            Section::Variables => "VARIABLES",
            Section::Constraints => "CONSTRAINTS",
            Section::Objectives => "OBJECTIVES",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Section> {
        Section::ALL
            .into_iter()
            .find(|s| s.tag().eq_ignore_ascii_case(tag))
    }
}

impl fmt::Display for Section {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Model category. Open-ended: anything unrecognized lands in `Other`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelType {
    Probabilistic,
    Sat,
    Csp,
    Arithmetic,
    LogicalInference,
    Temporal,
    Spatial,
    Other(String),
}

impl ModelType {
    const NAMED: [(&'static str, ModelType); 7] = [
        ("probabilistic", ModelType::Probabilistic),
        ("SAT", ModelType::Sat),
        ("CSP", ModelType::Csp),
        ("arithmetic", ModelType::Arithmetic),
        ("logical-inference", ModelType::LogicalInference),
        ("temporal", ModelType::Temporal),
        ("spatial", ModelType::Spatial),
    ];

    /// Parses a TYPE line. `other: <label>` always yields `Other`, so
    /// labels that collide with a named type still round-trip.
    pub fn parse_label(text: &str) -> ModelType {
        let text = text.trim();
        if let Some(rest) = strip_prefix_ci(text, "other:") {
            return ModelType::Other(rest.trim().to_string());
        }
        Self::NAMED
            .iter()
            .find(|(name, _)| name.eq_ignore_ascii_case(text))
            .map(|(_, t)| t.clone())
            .unwrap_or_else(|| ModelType::Other(text.to_string()))
    }

    pub fn label(&self) -> String {
        match self {
            ModelType::Other(label) => format!("other: {label}"),
            named => Self::NAMED
                .iter()
                .find(|(_, t)| t == named)
                .map(|(name, _)| name.to_string())
                .expect("every named variant is listed"),
        }
    }
}

fn strip_prefix_ci<'a>(text: &'a str, prefix: &str) -> Option<&'a str> {
    if text.len() >= prefix.len()
        && text.is_char_boundary(prefix.len())
        && text[..prefix.len()].eq_ignore_ascii_case(prefix)
    {
        Some(&text[prefix.len()..])
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableDecl {
    pub name: String,
    pub domain: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl VariableDecl {
    pub fn new(name: impl Into<String>, domain: impl Into<String>) -> Self {
        VariableDecl {
            name: name.into(),
            domain: domain.into(),
            note: None,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintExpr {
    /// 1-based position within the model.
    pub id: usize,
    pub text: String,
    pub referenced_vars: BTreeSet<String>,
}

impl ConstraintExpr {
    pub fn new(id: usize, text: impl Into<String>) -> Self {
        Self::with_options(id, text, &IdentifierOptions::default())
    }

    pub fn with_options(id: usize, text: impl Into<String>, opts: &IdentifierOptions) -> Self {
        let text = text.into();
        let referenced_vars = extract_identifiers(&text, opts);
        ConstraintExpr {
            id,
            text,
            referenced_vars,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectiveKind {
    Compute,
    Decide,
    Optimize,
}

impl ObjectiveKind {
    pub fn keyword(self) -> &'static str {
        match self {
            ObjectiveKind::Compute => "compute",
            ObjectiveKind::Decide => "decide",
            ObjectiveKind::Optimize => "optimize",
        }
    }

    pub fn from_keyword(word: &str) -> Option<Self> {
        match word.trim().to_ascii_lowercase().as_str() {
            "compute" | "calculate" => Some(ObjectiveKind::Compute),
            "decide" | "determine" => Some(ObjectiveKind::Decide),
            "optimize" | "maximize" | "minimize" => Some(ObjectiveKind::Optimize),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Objective {
    pub kind: ObjectiveKind,
    pub text: String,
}

impl Objective {
    pub fn new(kind: ObjectiveKind, text: impl Into<String>) -> Self {
        Objective {
            kind,
            text: text.into(),
        }
    }

    /// Variables named in backticks, e.g. "calculate `x`".
    pub fn referenced_vars(&self) -> BTreeSet<String> {
        self.text
            .split('`')
            .skip(1)
            .step_by(2)
            .map(str::trim)
            .filter(|s| is_identifier(s))
            .map(str::to_string)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormalModel {
    pub overview: String,
    pub model_type: ModelType,
    pub variables: Vec<VariableDecl>,
    pub constraints: Vec<ConstraintExpr>,
    pub objectives: Vec<Objective>,
}

impl FormalModel {
    pub fn variable_names(&self) -> BTreeSet<&str> {
        self.variables.iter().map(|v| v.name.as_str()).collect()
    }

    /// Checks every invariant and reports all violations found.
    pub fn validate(&self) -> Vec<SchemaViolation> {
        validate(self)
    }

    pub fn to_document(&self) -> String {
        serialize(self)
    }

    /// One-line JSON form used in corpus files.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json_line(line: &str) -> Result<FormalModel, serde_json::Error> {
        serde_json::from_str(line)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ViolationCode {
    MissingSection,
    DuplicateVariable,
    UnknownVariableRef,
    EmptyObjective,
    MalformedDocument,
}

/// Where a violation was found. Document-level checks fill in `line`
/// (1-based); model-level checks leave it empty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Location {
    pub section: Option<Section>,
    pub line: Option<usize>,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.section, self.line) {
            (Some(s), Some(l)) => write!(f, "{s}:{l}"),
            (Some(s), None) => write!(f, "{s}"),
            (None, Some(l)) => write!(f, "line {l}"),
            (None, None) => f.write_str("document"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaViolation {
    pub code: ViolationCode,
    pub location: Location,
    /// The offending name for `DuplicateVariable` / `UnknownVariableRef`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subject: Option<String>,
    pub message: String,
}

impl SchemaViolation {
    pub(crate) fn new(
        code: ViolationCode,
        section: Option<Section>,
        line: Option<usize>,
        message: impl Into<String>,
    ) -> Self {
        SchemaViolation {
            code,
            location: Location { section, line },
            subject: None,
            message: message.into(),
        }
    }

    pub(crate) fn about(mut self, subject: impl Into<String>) -> Self {
        self.subject = Some(subject.into());
        self
    }
}

impl fmt::Display for SchemaViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} at {}: {}", self.code, self.location, self.message)
    }
}

/// Renders violations one per line, as fed back to the formalization stage.
pub fn describe_violations(violations: &[SchemaViolation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn validate(model: &FormalModel) -> Vec<SchemaViolation> {
    check(model, &LineMap::default())
}

/// Source line numbers for a model that came from a document. Empty for
/// models built in code.
#[derive(Debug, Default)]
pub(crate) struct LineMap {
    pub type_line: Option<usize>,
    pub variables: Vec<usize>,
    pub constraints: Vec<usize>,
    pub objectives: Vec<usize>,
    pub objectives_header: Option<usize>,
    /// Set when the OBJECTIVES section is absent, which is already reported
    /// as `MissingSection`.
    pub objectives_missing: bool,
}

impl LineMap {
    fn at(lines: &[usize], i: usize) -> Option<usize> {
        lines.get(i).copied()
    }
}

pub(crate) fn check(model: &FormalModel, lines: &LineMap) -> Vec<SchemaViolation> {
    use ViolationCode::*;
    let mut out = Vec::new();

    if let ModelType::Other(label) = &model.model_type {
        if label.trim().is_empty() || label.contains('\n') {
            out.push(SchemaViolation::new(
                MalformedDocument,
                Some(Section::Type),
                lines.type_line,
                "model type label must be a nonempty single line",
            ));
        }
    }

    let mut seen = HashSet::new();
    for (i, var) in model.variables.iter().enumerate() {
        let line = LineMap::at(&lines.variables, i);
        if !is_identifier(&var.name) {
            out.push(
                SchemaViolation::new(
                    MalformedDocument,
                    Some(Section::Variables),
                    line,
                    format!("invalid variable name {:?}", var.name),
                )
                .about(var.name.clone()),
            );
        } else if !seen.insert(var.name.as_str()) {
            out.push(
                SchemaViolation::new(
                    DuplicateVariable,
                    Some(Section::Variables),
                    line,
                    format!("variable {} declared more than once", var.name),
                )
                .about(var.name.clone()),
            );
        }
    }

    let declared = model.variable_names();
    for (i, c) in model.constraints.iter().enumerate() {
        let line = LineMap::at(&lines.constraints, i);
        if c.text.trim().is_empty() {
            out.push(SchemaViolation::new(
                MalformedDocument,
                Some(Section::Constraints),
                line,
                format!("constraint c{} is empty", c.id),
            ));
        }
        for name in &c.referenced_vars {
            if !declared.contains(name.as_str()) {
                out.push(
                    SchemaViolation::new(
                        UnknownVariableRef,
                        Some(Section::Constraints),
                        line,
                        format!("constraint c{} references undeclared {name}", c.id),
                    )
                    .about(name.clone()),
                );
            }
        }
    }

    if model.objectives.is_empty() && !lines.objectives_missing {
        out.push(SchemaViolation::new(
            EmptyObjective,
            Some(Section::Objectives),
            lines.objectives_header,
            "at least one objective is required",
        ));
    }
    for (i, obj) in model.objectives.iter().enumerate() {
        let line = LineMap::at(&lines.objectives, i);
        if obj.text.trim().is_empty() {
            out.push(SchemaViolation::new(
                EmptyObjective,
                Some(Section::Objectives),
                line,
                format!("objective {} has no text", i + 1),
            ));
        }
        for name in obj.referenced_vars() {
            if !declared.contains(name.as_str()) {
                out.push(
                    SchemaViolation::new(
                        UnknownVariableRef,
                        Some(Section::Objectives),
                        line,
                        format!("objective {} references undeclared {name}", i + 1),
                    )
                    .about(name),
                );
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> FormalModel {
        FormalModel {
            overview: "Two digits sum to ten.".into(),
            model_type: ModelType::Csp,
            variables: vec![
                VariableDecl::new("x", "integer 0..9"),
                VariableDecl::new("y", "integer 0..9"),
            ],
            constraints: vec![ConstraintExpr::new(1, "x + y == 10")],
            objectives: vec![Objective::new(ObjectiveKind::Compute, "calculate x")],
        }
    }

    #[test]
    fn valid_model_has_no_violations() {
        assert!(sample().validate().is_empty());
    }

    #[test]
    fn undeclared_constraint_reference_is_reported() {
        let mut m = sample();
        m.constraints.push(ConstraintExpr::new(2, "z > 0"));
        let v = m.validate();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].code, ViolationCode::UnknownVariableRef);
        assert_eq!(v[0].subject.as_deref(), Some("z"));
    }

    #[test]
    fn duplicate_and_empty_objective_both_reported() {
        let mut m = sample();
        m.variables.push(VariableDecl::new("x", "boolean"));
        m.objectives.clear();
        let codes: Vec<_> = m.validate().iter().map(|v| v.code).collect();
        assert!(codes.contains(&ViolationCode::DuplicateVariable));
        assert!(codes.contains(&ViolationCode::EmptyObjective));
    }

    #[test]
    fn objective_backtick_refs_are_checked() {
        let mut m = sample();
        m.objectives[0].text = "calculate `w`".into();
        let v = m.validate();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].location.section, Some(Section::Objectives));
    }

    #[test]
    fn model_type_labels() {
        assert_eq!(ModelType::parse_label("csp"), ModelType::Csp);
        assert_eq!(ModelType::parse_label("SAT"), ModelType::Sat);
        assert_eq!(
            ModelType::parse_label("probabilistic calculate"),
            ModelType::Other("probabilistic calculate".into())
        );
        assert_eq!(
            ModelType::parse_label("other: CSP"),
            ModelType::Other("CSP".into())
        );
        assert_eq!(ModelType::Other("CSP".into()).label(), "other: CSP");
    }

    #[test]
    fn json_line_round_trip() {
        let m = sample();
        let line = m.to_json_line();
        assert!(!line.contains('\n'));
        assert_eq!(FormalModel::from_json_line(&line).unwrap(), m);
    }
}
