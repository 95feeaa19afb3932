#![no_main]

use beamsurp_core::scorer::TabularScorer;
use beamsurp_core::transition::ActionKind;
use beamsurp_core::{ParserState, Scorer};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(scorer) = TabularScorer::from_json(text) else { return };
    let state = ParserState::new();
    let _ = scorer.action_logprobs(&state, &[ActionKind::Shift]);
    let _ = scorer.word_distribution(&state);
});
