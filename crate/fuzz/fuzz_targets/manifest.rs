#![no_main]

use libfuzzer_sys::fuzz_target;
use mixkpp::cli_io::output::RunManifest;

fuzz_target!(|data: &[u8]| {
    if let Ok(m) = serde_json::from_slice::<RunManifest>(data) {
        let text = serde_json::to_string(&m).expect("serializes");
        let back: RunManifest = serde_json::from_str(&text).expect("round trip");
        assert_eq!(back.outputs, m.outputs);
    }
});
