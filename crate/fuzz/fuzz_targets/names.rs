#![no_main]

use libfuzzer_sys::fuzz_target;
use mixkpp::dynamics::Scheme;
use mixkpp::fronts::Regime;
use mixkpp::kernels::KernelKind;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = text.parse::<Scheme>();
        let _ = text.parse::<Regime>();
        let _ = text.parse::<KernelKind>();
    }
});
