#![no_main]

//! Client side: arbitrary reply streams from a misbehaving server.

use std::io::Cursor;

use beamsurp_core::scorer::ExternalScorer;
use beamsurp_core::transition::ActionKind;
use beamsurp_core::{ParserState, Scorer};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(client) = ExternalScorer::connect(Cursor::new(data.to_vec()), std::io::sink()) else {
        return;
    };
    let state = ParserState::new();
    let _ = client.word_logprob(&state, "the");
    let _ = client.action_logprobs(&state, &[ActionKind::Shift]);
});
