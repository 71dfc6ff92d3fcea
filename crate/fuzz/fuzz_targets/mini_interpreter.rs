#![no_main]

use lang2logic::executor::{execute, ExecutionLimits, MiniInterpreter};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    let limits = ExecutionLimits {
        wall_timeout: std::time::Duration::from_millis(200),
        memory_cap: 1 << 20,
        output_cap: 4096,
    };
    let _ = execute(data, &limits, &MiniInterpreter);
});
