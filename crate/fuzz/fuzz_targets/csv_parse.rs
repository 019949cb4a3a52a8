#![no_main]

use libfuzzer_sys::fuzz_target;
use obcd::problems::data::{parse_csv, to_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(m) = parse_csv(text) {
        assert!(m.as_slice().iter().all(|v| v.is_finite()));
        assert_eq!(parse_csv(&to_csv(&m)).unwrap(), m);
    }
});
