use std::collections::BTreeSet;

use lang2logic::model::{
    parse_model, ConstraintExpr, FormalModel, ModelType, Objective, ObjectiveKind, VariableDecl, ViolationCode,
};
use proptest::prelude::*;

/// Free text for one field: printable ASCII including the escape-relevant
/// characters, no leading or trailing blanks.
fn field() -> impl Strategy<Value = String> {
    "[A-Za-z0-9 ,.;:()<>=+*/#|\\\\-]{0,24}".prop_map(|s| s.trim().to_string())
}

fn multiline_field() -> impl Strategy<Value = String> {
    prop::collection::vec(field(), 1..3).prop_map(|parts| parts.join("\n").trim().to_string())
}

fn var_name() -> impl Strategy<Value = String> {
    "[a-z][a-z0-9_]{0,6}".prop_filter("not a keyword", |s| {
        !["and", "or", "not", "in", "if", "else", "abs", "min", "max", "sum", "true", "false"].contains(&s.as_str())
    })
}

fn model_type() -> impl Strategy<Value = ModelType> {
    prop_oneof![
        Just(ModelType::Probabilistic),
        Just(ModelType::Sat),
        Just(ModelType::Csp),
        Just(ModelType::Arithmetic),
        Just(ModelType::LogicalInference),
        Just(ModelType::Temporal),
        Just(ModelType::Spatial),
        "[A-Za-z][A-Za-z0-9 |\\\\-]{0,12}[A-Za-z0-9]".prop_map(ModelType::Other),
    ]
}

fn overview() -> impl Strategy<Value = String> {
    prop::collection::vec("[A-Za-z0-9#\\\\][A-Za-z0-9 ,.#\\\\]{0,30}", 1..4)
        .prop_map(|lines| lines.iter().map(|l| l.trim()).collect::<Vec<_>>().join("\n"))
        .prop_filter("nonempty", |s| !s.trim().is_empty())
}

fn constraint_text(vars: Vec<String>) -> impl Strategy<Value = String> {
    let ops = prop::sample::select(vec!["+", "-", "*", "==", "<=", ">", "!="]);
    (prop::sample::select(vars.clone()), ops, prop::sample::select(vars), 0i64..100)
        .prop_map(|(a, op, b, k)| format!("{a} {op} {b} + {k}"))
}

fn objective(vars: Vec<String>) -> impl Strategy<Value = Objective> {
    let kind = prop::sample::select(vec![ObjectiveKind::Compute, ObjectiveKind::Decide, ObjectiveKind::Optimize]);
    (kind, prop::sample::select(vars), field()).prop_map(|(kind, v, extra)| {
        let text = format!("{} `{v}`", extra.replace('`', "")).trim().to_string();
        Objective::new(kind, text)
    })
}

fn valid_model() -> impl Strategy<Value = FormalModel> {
    prop::collection::btree_set(var_name(), 1..6)
        .prop_flat_map(|names| {
            let names: Vec<String> = names.into_iter().collect();
            let vars = names
                .iter()
                .map(|n| (Just(n.clone()), multiline_field(), prop::option::of(field().prop_filter("nonempty", |s| !s.is_empty()))))
                .collect::<Vec<_>>();
            (
                overview(),
                model_type(),
                vars,
                prop::collection::vec(constraint_text(names.clone()), 0..5),
                prop::collection::vec(objective(names), 1..3),
            )
        })
        .prop_map(|(overview, model_type, vars, constraints, objectives)| FormalModel {
            overview,
            model_type,
            variables: vars
                .into_iter()
                .map(|(n, d, note)| VariableDecl {
                    name: n,
                    domain: d,
                    note,
                })
                .collect(),
            constraints: constraints
                .into_iter()
                .enumerate()
                .map(|(i, t)| ConstraintExpr::new(i + 1, t))
                .collect(),
            objectives,
        })
}

fn codes(doc: &str) -> BTreeSet<String> {
    match parse_model(doc) {
        Ok(_) => BTreeSet::new(),
        Err(vs) => vs.iter().map(|v| format!("{:?}", v.code)).collect(),
    }
}

fn has(doc: &str, code: ViolationCode) -> bool {
    codes(doc).contains(&format!("{code:?}"))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn serialize_then_parse_is_identity(m in valid_model()) {
        prop_assert!(m.validate().is_empty(), "{:?}", m.validate());
        let doc = m.to_document();
        let back = parse_model(&doc);
        prop_assert_eq!(back.as_ref().ok(), Some(&m), "document:\n{}\nerrors: {:?}", doc, back.as_ref().err());
        // the serializer is canonical: a second pass is byte-identical
        prop_assert_eq!(back.unwrap().to_document(), doc);
        prop_assert_eq!(FormalModel::from_json_line(&m.to_json_line()).unwrap(), m);
    }

    #[test]
    fn references_are_closed(m in valid_model()) {
        let declared: BTreeSet<String> = m.variables.iter().map(|v| v.name.clone()).collect();
        for c in &m.constraints {
            prop_assert!(c.referenced_vars.is_subset(&declared));
        }
        for o in &m.objectives {
            prop_assert!(o.referenced_vars().is_subset(&declared));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn dropping_a_section_is_missing_section(m in valid_model(), which in 0usize..5) {
        let tags = ["## OVERVIEW", "## TYPE", "## VARIABLES", "## CONSTRAINTS", "## OBJECTIVES"];
        let doc = m.to_document();
        let start = doc.find(tags[which]).unwrap();
        let end = tags[which + 1..].iter().filter_map(|t| doc.find(t)).next().unwrap_or(doc.len());
        let cut = format!("{}{}", &doc[..start], &doc[end..]);
        prop_assert!(has(&cut, ViolationCode::MissingSection), "{}", cut);
    }

    #[test]
    fn repeating_a_variable_is_duplicate_variable(m in valid_model()) {
        let v = &m.variables[0];
        let doc = m.to_document().replace("## CONSTRAINTS", &format!("- {}: again\n## CONSTRAINTS", v.name));
        let vs = parse_model(&doc).unwrap_err();
        prop_assert!(vs.iter().any(|x| x.code == ViolationCode::DuplicateVariable && x.subject.as_deref() == Some(&v.name)));
    }

    #[test]
    fn undeclared_reference_is_unknown_variable_ref(m in valid_model()) {
        let doc = m.to_document().replace("## OBJECTIVES", "- zz_undeclared >= 1\n## OBJECTIVES");
        let vs = parse_model(&doc).unwrap_err();
        prop_assert!(vs.iter().any(|x| x.code == ViolationCode::UnknownVariableRef && x.subject.as_deref() == Some("zz_undeclared")));
    }

    #[test]
    fn blank_objectives_are_empty_objective(m in valid_model(), keep_bullet in any::<bool>()) {
        let doc = m.to_document();
        let head = &doc[..doc.find("## OBJECTIVES").unwrap()];
        let doc = format!("{head}## OBJECTIVES\n{}", if keep_bullet { "- compute:\n" } else { "" });
        prop_assert!(has(&doc, ViolationCode::EmptyObjective), "{}", doc);
    }

    #[test]
    fn stray_text_is_malformed(m in valid_model(), junk in "[a-z]{1,8}") {
        let doc = format!("{junk}\n{}", m.to_document());
        prop_assert!(has(&doc, ViolationCode::MalformedDocument));
        let bad_name = m.to_document().replace("## CONSTRAINTS", "- 9lives: integer\n## CONSTRAINTS");
        prop_assert!(has(&bad_name, ViolationCode::MalformedDocument));
    }
}

#[test]
fn combined_violations_are_all_reported() {
    let doc = "## OVERVIEW\nx\n## TYPE\nCSP\n## VARIABLES\n- a: int\n- a: int\n## CONSTRAINTS\n- b > 0\n## OBJECTIVES\n- compute:\n";
    let got = codes(doc);
    for c in ["DuplicateVariable", "UnknownVariableRef", "EmptyObjective"] {
        assert!(got.contains(c), "{got:?}");
    }
}
