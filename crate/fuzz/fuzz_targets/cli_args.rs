#![no_main]

use libfuzzer_sys::fuzz_target;

// Arguments are separated by NUL bytes.
fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    let args = std::iter::once("obcd").chain(text.split('\0'));
    let _ = obcd::cli::parse_args(args);
});
