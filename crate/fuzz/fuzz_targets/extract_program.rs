#![no_main]

use lang2logic::orchestrator::{extract_model_document, extract_program};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    let _ = extract_program(data);
    let _ = extract_model_document(data);
});
