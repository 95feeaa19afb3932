#![no_main]

use beamsurp_core::engine::parse_construction_specs;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(specs) = parse_construction_specs(text) {
        for s in &specs {
            let _ = s.modified_sentence();
            let _ = s.unambiguous_disambiguating();
        }
    }
});
