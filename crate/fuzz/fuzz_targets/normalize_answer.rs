#![no_main]

use lang2logic::executor::{answers_match, normalize_answer, AnswerKind, DEFAULT_TOLERANCE};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    for kind in [None, Some(AnswerKind::Number), Some(AnswerKind::Boolean), Some(AnswerKind::ChoiceLabel), Some(AnswerKind::String)] {
        if let Ok(a) = normalize_answer(data, kind) {
            let again = normalize_answer(&a.render(), Some(a.kind())).expect("rendered answers re-normalize");
            assert_eq!(again, a);
            assert!(answers_match(&a, &a, DEFAULT_TOLERANCE));
        }
    }
});
