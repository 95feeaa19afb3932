#![no_main]

use beamsurp_core::transition::{parse_actions, render_actions, replay};
use beamsurp_core::Strategy;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(actions) = parse_actions(text) else { return };
    assert_eq!(parse_actions(&render_actions(&actions)).unwrap(), actions);
    for s in Strategy::ALL {
        let _ = replay(&actions, s);
    }
});
