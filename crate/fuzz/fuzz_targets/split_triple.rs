#![no_main]

use lang2logic::dataset::split_triple;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    let _ = split_triple(data);
});
