//! Prompt templates, shipped as text assets under `prompts/`.
//!
//! Placeholders are `{name}`. Substitution is single-pass, so values that
//! themselves contain `{...}` are inserted literally.

/// Bumped whenever any template text changes; recorded in every trace.
pub const PROMPT_VERSION: &str = "v1";

pub const OGF_TEMPLATE: &str = include_str!("../../prompts/ogf.txt");
pub const LG_TEMPLATE: &str = include_str!("../../prompts/lg.txt");
pub const COT_TEMPLATE: &str = include_str!("../../prompts/cot.txt");
pub const PAL_TEMPLATE: &str = include_str!("../../prompts/pal.txt");
pub const TEACHER_TEMPLATE: &str = include_str!("../../prompts/teacher.txt");
pub const JUDGE_TEMPLATE: &str = include_str!("../../prompts/judge.txt");

/// Replaces `{key}` for every listed key. Unknown placeholders are kept.
pub fn render(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let hit = after.find('}').and_then(|close| {
            let key = &after[..close];
            vars.iter().find(|(k, _)| *k == key).map(|(_, v)| (close, *v))
        });
        match hit {
            Some((close, value)) => {
                out.push_str(value);
                rest = &after[close + 1..];
            }
            None => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

fn feedback_block(feedback: Option<&str>) -> String {
    match feedback {
        Some(f) => format!("\nYour previous attempt failed with:\n{f}\nFix these problems in your new answer.\n"),
        None => String::new(),
    }
}

pub fn ogf_prompt(question: &str, instruction: &str, feedback: Option<&str>) -> String {
    render(
        OGF_TEMPLATE,
        &[
            ("question", question),
            ("instruction", instruction),
            ("feedback", &feedback_block(feedback)),
        ],
    )
}

/// With `question` set (context isolation off) the problem text is shown
/// alongside the model.
pub fn lg_prompt(model_document: &str, question: Option<&str>, feedback: Option<&str>) -> String {
    let context = question.map(|q| format!("\nOriginal problem:\n{q}\n")).unwrap_or_default();
    render(
        LG_TEMPLATE,
        &[
            ("model_document", model_document),
            ("context", &context),
            ("feedback", &feedback_block(feedback)),
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_is_single_pass() {
        assert_eq!(render("a {x} b {y} {z}", &[("x", "{y}"), ("y", "2")]), "a {y} b 2 {z}");
        assert_eq!(render("{", &[]), "{");
        assert_eq!(render("}{x", &[("x", "1")]), "}{x");
    }

    #[test]
    fn templates_fill_every_placeholder() {
        let p = ogf_prompt("Q?", "Be brief.", Some("DuplicateVariable"));
        assert!(p.contains("Q?") && p.contains("Be brief.") && p.contains("DuplicateVariable"));
        assert!(!p.contains("{question}") && !p.contains("{feedback}"));
        let l = lg_prompt("## OVERVIEW\nx", None, None);
        assert!(!l.contains('{') || !l.contains("{model_document}"));
        assert!(!l.contains("{context}") && !l.contains("{feedback}"));
    }
}
