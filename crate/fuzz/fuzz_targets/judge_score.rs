#![no_main]

use lang2logic::dataset::parse_judge_score;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Some(s) = parse_judge_score(data) {
        assert!((1..=10).contains(&s), "score {s}");
    }
});
