#![no_main]

use beamsurp_core::treebank::parse_bracketed;
use beamsurp_core::Treebank;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(tree) = parse_bracketed(text) {
        let again = parse_bracketed(&tree.render_bracketed()).expect("rendered trees parse");
        assert_eq!(again, tree);
    }
    if let Ok(tb) = Treebank::parse(text, "fuzz") {
        let again = Treebank::parse(&tb.render(), "fuzz").expect("rendered treebanks parse");
        assert_eq!(again.trees, tb.trees);
    }
});
