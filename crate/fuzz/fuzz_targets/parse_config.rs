#![no_main]

use libfuzzer_sys::fuzz_target;
use mixkpp::cli_io::config::parse_config_str;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = parse_config_str(text, &[]) {
            let again = parse_config_str(&cfg.to_toml(), &[]).expect("echo parses");
            assert_eq!(again, cfg);
        }
    }
});
