#![no_main]

use lang2logic::model::parse_model;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(m) = parse_model(data) {
        // anything that parses must survive a canonical round trip
        let doc = m.to_document();
        assert_eq!(parse_model(&doc).as_ref(), Ok(&m), "{doc}");
    }
});
