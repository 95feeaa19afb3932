#![no_main]

use beamsurp_core::scorer::StateSignature;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(sig) = text.parse::<StateSignature>() else { return };
    let again: StateSignature = sig.to_string().parse().expect("rendered signatures parse");
    assert_eq!(again, sig);
});
