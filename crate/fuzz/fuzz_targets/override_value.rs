#![no_main]

use libfuzzer_sys::fuzz_target;
use mixkpp::cli_io::config::parse_override_value;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = parse_override_value(text);
    }
});
