#![no_main]

use lang2logic::executor::protocol::decode_response;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    let _ = decode_response(data);
});
