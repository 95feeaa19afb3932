#![no_main]

use beamsurp_rt::rows::{lagged, read_rows};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(rows) = read_rows(data) {
        let _ = lagged(&rows);
    }
});
