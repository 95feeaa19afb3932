#![no_main]

//! Server side: arbitrary request lines against a small fitted table.

use std::sync::OnceLock;

use beamsurp_core::scorer::{serve, FitConfig, TabularScorer};
use beamsurp_core::{Strategy, Treebank};
use libfuzzer_sys::fuzz_target;

fn scorer() -> &'static TabularScorer {
    static S: OnceLock<TabularScorer> = OnceLock::new();
    S.get_or_init(|| {
        let tb = Treebank::parse("(S (NP the dog) (VP barked))\n(S (NP a cat) (VP sat))\n", "seed").unwrap();
        let cfg = FitConfig {
            min_word_count: 1,
            ..FitConfig::default()
        };
        TabularScorer::fit(&tb, Strategy::TopDown, &cfg).unwrap()
    })
}

fuzz_target!(|data: &[u8]| {
    let _ = serve(scorer(), data, std::io::sink());
});
