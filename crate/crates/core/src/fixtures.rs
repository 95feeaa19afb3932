//! Small built-in grammars used by tests, benchmarks and the command line
//! demo runs. Every grammar here is small enough to enumerate exactly.

use crate::engine::{parse_construction_specs, ConstructionSpec};
use crate::scorer::{ExactFitConfig, FitConfig, SignatureConfig, TabularScorer};
use crate::transition::{DerivationLimits, Strategy};
use crate::treebank::{parse_weighted_treebank, Treebank};

pub const TWO_PARSE_TREEBANK: &str = include_str!("../fixtures/two_parse.wtb");
pub const ATTACHMENT_TREEBANK: &str = include_str!("../fixtures/attachment.wtb");
pub const SMALL_TREEBANK: &str = include_str!("../fixtures/small.trees");
pub const GARDEN_PATH_TREEBANK: &str = include_str!("../fixtures/garden_path.wtb");
pub const GARDEN_PATH_SPECS: &str = include_str!("../fixtures/garden_path_specs.json");

/// A scorer together with the sentences it is exercised on.
pub struct Fixture {
    pub name: &'static str,
    pub strategy: Strategy,
    pub scorer: TabularScorer,
    pub limits: DerivationLimits,
    pub sentences: Vec<Vec<String>>,
}

pub fn tokens(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_string).collect()
}

/// Fit settings for the garden path grammar: unlexicalized signatures over
/// the whole stack, with a little word smoothing so any word can follow any
/// structural context.
pub fn garden_path_fit() -> ExactFitConfig {
    ExactFitConfig {
        signature: SignatureConfig {
            top_entries: 64,
            open_clip: 64,
            lexical: false,
        },
        word_smoothing: 0.01,
    }
}

pub fn two_parse_scorer() -> TabularScorer {
    let trees = parse_weighted_treebank(TWO_PARSE_TREEBANK).expect("fixture parses");
    TabularScorer::fit_exact(&trees, Strategy::TopDown, &ExactFitConfig::default())
        .expect("fixture fits")
}

pub fn garden_path_scorer(strategy: Strategy) -> TabularScorer {
    let trees = parse_weighted_treebank(GARDEN_PATH_TREEBANK).expect("fixture parses");
    TabularScorer::fit_exact(&trees, strategy, &garden_path_fit()).expect("fixture fits")
}

pub fn garden_path_specs() -> Vec<ConstructionSpec> {
    parse_construction_specs(GARDEN_PATH_SPECS).expect("fixture specs parse")
}

/// The grammars and sentences used for checking beam search against exact
/// enumeration, under both strategies.
pub fn oracle_fixtures() -> Vec<Fixture> {
    let mut out = Vec::new();
    let attachment = parse_weighted_treebank(ATTACHMENT_TREEBANK).expect("fixture parses");
    let small = Treebank::parse(SMALL_TREEBANK, "small").expect("fixture parses");
    let small_fit = FitConfig {
        min_word_count: 1,
        ..FitConfig::default()
    };
    let gp_sentences: Vec<Vec<String>> = garden_path_specs()
        .into_iter()
        .flat_map(|s| [s.ambiguous_sentence, s.unambiguous_sentence])
        .collect();
    out.push(Fixture {
        name: "two-parse",
        strategy: Strategy::TopDown,
        scorer: two_parse_scorer(),
        limits: DerivationLimits::default(),
        sentences: vec![tokens("w1 w2"), tokens("w1 w3")],
    });
    for strategy in Strategy::ALL {
        out.push(Fixture {
            name: "attachment",
            strategy,
            scorer: TabularScorer::fit_exact(&attachment, strategy, &ExactFitConfig::default())
                .expect("fixture fits"),
            limits: DerivationLimits::default(),
            sentences: vec![
                tokens("the girl saw the boy with the scope"),
                tokens("the girl saw the boy with the dog"),
                tokens("the boy with the dog ran"),
            ],
        });
        out.push(Fixture {
            name: "small-smoothed",
            strategy,
            scorer: TabularScorer::fit(&small, strategy, &small_fit).expect("fixture fits"),
            limits: DerivationLimits::new(2, 2).expect("valid limits"),
            sentences: vec![tokens("a b"), tokens("d c"), tokens("c a")],
        });
        out.push(Fixture {
            name: "garden-path",
            strategy,
            scorer: garden_path_scorer(strategy),
            limits: DerivationLimits::default(),
            sentences: gp_sentences.clone(),
        });
    }
    out
}
