#![no_main]

use libfuzzer_sys::fuzz_target;
use obcd::cli::{parse_trace_line, TraceEvent};

fuzz_target!(|data: &[u8]| {
    let Ok(line) = std::str::from_utf8(data) else { return };
    if let Ok(event) = parse_trace_line(line) {
        let text = match &event {
            TraceEvent::Record(r) => serde_json::to_string(r),
            TraceEvent::Summary(s) => serde_json::to_string(s),
        }
        .unwrap();
        assert_eq!(parse_trace_line(&text).unwrap(), event);
    }
});
