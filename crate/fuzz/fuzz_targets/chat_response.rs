#![no_main]

use lang2logic::llm::parse_completion;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    let _ = parse_completion(data);
});
