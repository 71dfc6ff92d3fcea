#![no_main]

use lang2logic::model::FormalModel;
use lang2logic::orchestrator::ReasoningTrace;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(t) = serde_json::from_str::<ReasoningTrace>(data) {
        let line = t.to_json_line();
        let back: ReasoningTrace = serde_json::from_str(&line).expect("trace re-decodes");
        assert_eq!(back.trace_id, t.trace_id);
    }
    let _ = FormalModel::from_json_line(data);
});
