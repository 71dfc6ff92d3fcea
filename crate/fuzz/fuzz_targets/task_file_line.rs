#![no_main]

use lang2logic::bench::{parse_seed_corpus, parse_task_file};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    let _ = parse_task_file(data);
    let _ = parse_seed_corpus(data);
});
