#![no_main]

use beamsurp_core::scorer::{ExactFitConfig, TabularScorer};
use beamsurp_core::treebank::parse_weighted_treebank;
use beamsurp_core::Strategy;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(trees) = parse_weighted_treebank(text) else { return };
    if trees.len() <= 8 {
        let _ = TabularScorer::fit_exact(&trees, Strategy::TopDown, &ExactFitConfig::default());
    }
});
