#![no_main]

use libfuzzer_sys::fuzz_target;
use mixkpp::cli_io::config::{env_overrides, parse_config_str};

// Lines of `NAME=value`.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let vars: Vec<(&str, &str)> = text.lines().filter_map(|l| l.split_once('=')).collect();
    if let Ok(overrides) = env_overrides(vars) {
        let _ = parse_config_str("", &overrides);
    }
});
