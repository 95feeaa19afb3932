//! Exhaustive enumeration of derivations, for checking the beam search on
//! grammars small enough to enumerate.
//!
//! Successors come from the same routine the beam search uses, so legality
//! and limits are shared rather than reimplemented.

use std::fmt::Write as _;

use thiserror::Error;

use crate::beam::successor_steps;
use crate::logspace::{log_sum_exp, nats_to_bits};
use crate::scorer::{Scorer, ScorerError};
use crate::transition::{apply, Action, DerivationLimits, ParserState, Strategy};
use crate::treebank::Tree;

pub const DEFAULT_EXPANSION_CAP: usize = 1_000_000;

#[derive(Debug, Error)]
pub enum ExactError {
    #[error("enumeration exceeded {0} expansions")]
    CapExceeded(usize),
    #[error("the prefix has zero probability")]
    ZeroMass,
    #[error("no complete derivation of the sentence")]
    NoCompleteParse,
    #[error(transparent)]
    Scorer(#[from] ScorerError),
}

/// One enumerated derivation with its joint log probability.
#[derive(Debug, Clone, PartialEq)]
pub struct Derivation {
    pub actions: Vec<Action>,
    pub state: ParserState,
    pub logprob: f64,
}

#[derive(Clone, Copy)]
pub struct Enumerator<'a> {
    pub scorer: &'a dyn Scorer,
    pub strategy: Strategy,
    pub limits: DerivationLimits,
    pub cap: usize,
}

impl<'a> Enumerator<'a> {
    pub fn new(scorer: &'a dyn Scorer, strategy: Strategy, limits: DerivationLimits) -> Self {
        Enumerator {
            scorer,
            strategy,
            limits,
            cap: DEFAULT_EXPANSION_CAP,
        }
    }

    /// Depth-first search from the empty state. `stop` decides whether a
    /// reached state is a result (and is not expanded further); `word_at`
    /// gives the token a `SHIFT` from a state may generate.
    fn search(
        &self,
        stop: impl Fn(&ParserState) -> bool,
        word_at: impl Fn(&ParserState) -> Option<String>,
    ) -> Result<Vec<Derivation>, ExactError> {
        let mut out = Vec::new();
        let mut expansions = 0usize;
        let mut stack = vec![(Vec::<Action>::new(), ParserState::new(), 0.0f64)];
        while let Some((actions, state, lp)) = stack.pop() {
            if stop(&state) {
                out.push(Derivation {
                    actions,
                    state,
                    logprob: lp,
                });
                continue;
            }
            expansions += 1;
            if expansions > self.cap {
                return Err(ExactError::CapExceeded(self.cap));
            }
            let word = word_at(&state);
            let steps = successor_steps(
                self.scorer,
                &state,
                self.strategy,
                &self.limits,
                word.as_deref(),
            )?;
            for (a, step) in steps.into_iter().rev() {
                let next = apply(&state, &a, self.strategy).expect("successors are legal");
                let mut acts = actions.clone();
                acts.push(a);
                stack.push((acts, next, lp + step));
            }
        }
        Ok(out)
    }

    /// Every nonzero-probability derivation whose `SHIFT`s spell exactly
    /// `prefix` and which ends right after the last `SHIFT`.
    pub fn enumerate_parses(&self, prefix: &[String]) -> Result<Vec<Derivation>, ExactError> {
        let n = prefix.len();
        if n == 0 {
            return Ok(vec![Derivation {
                actions: Vec::new(),
                state: ParserState::new(),
                logprob: 0.0,
            }]);
        }
        self.search(
            |s| s.words_generated() == n,
            |s| prefix.get(s.words_generated()).cloned(),
        )
    }

    /// Log of the summed probability of all derivations of `prefix`.
    pub fn prefix_logmass(&self, prefix: &[String]) -> Result<f64, ExactError> {
        Ok(log_sum_exp(
            self.enumerate_parses(prefix)?.iter().map(|d| d.logprob),
        ))
    }

    /// `-log2 P(next | prefix)`, marginalizing over all parses of the prefix.
    pub fn next_word_surprisal(&self, prefix: &[String], next: &str) -> Result<f64, ExactError> {
        let denom = self.prefix_logmass(prefix)?;
        if denom == f64::NEG_INFINITY {
            return Err(ExactError::ZeroMass);
        }
        let mut longer = prefix.to_vec();
        longer.push(next.to_string());
        Ok(nats_to_bits(self.prefix_logmass(&longer)? - denom))
    }

    /// Surprisal of every word of `sentence`.
    pub fn surprisals(&self, sentence: &[String]) -> Result<Vec<f64>, ExactError> {
        let masses: Vec<f64> = (0..=sentence.len())
            .map(|i| self.prefix_logmass(&sentence[..i]))
            .collect::<Result<_, _>>()?;
        masses
            .windows(2)
            .map(|w| {
                if w[0] == f64::NEG_INFINITY {
                    Err(ExactError::ZeroMass)
                } else {
                    Ok(nats_to_bits(w[1] - w[0]))
                }
            })
            .collect()
    }

    /// Every completed derivation of exactly `sentence`. Derivations stop at
    /// the first completed tree.
    pub fn complete_parses(&self, sentence: &[String]) -> Result<Vec<Derivation>, ExactError> {
        let n = sentence.len();
        self.search(
            |s| s.words_generated() == n && s.is_terminal(),
            |s| sentence.get(s.words_generated()).cloned(),
        )
    }

    /// Surprisal of ending the sentence after its last word.
    pub fn eos_surprisal(&self, sentence: &[String]) -> Result<f64, ExactError> {
        let denom = self.prefix_logmass(sentence)?;
        if denom == f64::NEG_INFINITY {
            return Err(ExactError::ZeroMass);
        }
        let done = log_sum_exp(self.complete_parses(sentence)?.iter().map(|d| d.logprob));
        Ok(nats_to_bits(done - denom))
    }

    /// The most probable complete tree, ties broken by action sequence.
    pub fn best_parse(&self, sentence: &[String]) -> Result<(Tree, Derivation), ExactError> {
        let best = self
            .complete_parses(sentence)?
            .into_iter()
            .min_by(|a, b| {
                b.logprob
                    .total_cmp(&a.logprob)
                    .then_with(|| a.actions.cmp(&b.actions))
            })
            .ok_or(ExactError::NoCompleteParse)?;
        let tree = best
            .state
            .tree()
            .expect("complete derivations hold a tree")
            .clone();
        Ok((tree, best))
    }
}

/// One derivation per line: the log probability, a tab, then the actions.
pub fn render_derivations(ds: &[Derivation]) -> String {
    let mut out = String::new();
    for d in ds {
        let acts: Vec<String> = d.actions.iter().map(|a| a.to_string()).collect();
        let _ = writeln!(out, "{:.17e}\t{}", d.logprob, acts.join(" "));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scorer::{sequence_logprob, ExactFitConfig, FitConfig, TabularScorer};
    use crate::treebank::{parse_weighted_treebank, Treebank};

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    fn exact(text: &str, strategy: Strategy) -> TabularScorer {
        TabularScorer::fit_exact(
            &parse_weighted_treebank(text).unwrap(),
            strategy,
            &ExactFitConfig::default(),
        )
        .unwrap()
    }

    #[test]
    fn empty_prefix_is_the_empty_derivation() {
        let s = exact("1 (X w)", Strategy::TopDown);
        let e = Enumerator::new(&s, Strategy::TopDown, DerivationLimits::default());
        let ds = e.enumerate_parses(&[]).unwrap();
        assert_eq!(ds.len(), 1);
        assert!(ds[0].actions.is_empty());
        assert_eq!(ds[0].logprob, 0.0);
    }

    #[test]
    fn two_root_labels_give_two_derivations() {
        let s = exact("3 (A w)\n1 (B w)", Strategy::TopDown);
        let e = Enumerator::new(&s, Strategy::TopDown, DerivationLimits::default());
        let ds = e.enumerate_parses(&toks("w")).unwrap();
        assert_eq!(ds.len(), 2);
        for d in &ds {
            let lp = sequence_logprob(&s, &d.actions, Strategy::TopDown, &e.limits).unwrap();
            assert!((lp - d.logprob).abs() < 1e-12);
        }
        let total: f64 = ds.iter().map(|d| d.logprob.exp()).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn open_limit_can_exclude_every_parse() {
        let s = exact("1 (S (A w))", Strategy::TopDown);
        let e = Enumerator::new(&s, Strategy::TopDown, DerivationLimits::new(1, 40).unwrap());
        assert!(e.enumerate_parses(&toks("w")).unwrap().is_empty());
    }

    #[test]
    fn two_parse_surprisal() {
        let s = exact(
            "0.009 (S (X w1 w2))\n0.891 (S (X w1 w3))\n0.05 (S (Y w1 w2))\n0.05 (S (Y w1 w3))",
            Strategy::TopDown,
        );
        let e = Enumerator::new(&s, Strategy::TopDown, DerivationLimits::default());
        let bits = e.next_word_surprisal(&toks("w1"), "w2").unwrap();
        assert!((bits - (-(0.059f64).log2())).abs() < 1e-12);
        let (tree, _) = e.best_parse(&toks("w1 w3")).unwrap();
        assert_eq!(tree.to_string(), "(S (X w1 w3))");
        assert!(e.eos_surprisal(&toks("w1 w3")).unwrap().abs() < 1e-12);
    }

    #[test]
    fn cap_is_enforced() {
        let tb = Treebank::parse("(S (NP a b) (VP c (NP d)))", "t").unwrap();
        let s = TabularScorer::fit(&tb, Strategy::TopDown, &FitConfig::default()).unwrap();
        let mut e = Enumerator::new(&s, Strategy::TopDown, DerivationLimits::new(3, 4).unwrap());
        e.cap = 10;
        assert!(matches!(
            e.enumerate_parses(&toks("a b c")),
            Err(ExactError::CapExceeded(10))
        ));
    }

    #[test]
    fn prefix_mass_does_not_grow() {
        let tb = Treebank::parse("(S (NP a b) (VP c (NP d)))\n(S (NP a) (VP b))", "t").unwrap();
        let cfg = FitConfig {
            min_word_count: 1,
            ..FitConfig::default()
        };
        for strategy in Strategy::ALL {
            let s = TabularScorer::fit(&tb, strategy, &cfg).unwrap();
            let e = Enumerator::new(&s, strategy, DerivationLimits::new(2, 3).unwrap());
            let sent = toks("a b c");
            let masses: Vec<f64> = (0..=3)
                .map(|i| e.prefix_logmass(&sent[..i]).unwrap())
                .collect();
            assert!(
                masses.windows(2).all(|w| w[1] <= w[0] + 1e-12),
                "{masses:?}"
            );
        }
    }

    #[test]
    fn dump_format() {
        let s = exact("1 (X w)", Strategy::TopDown);
        let e = Enumerator::new(&s, Strategy::TopDown, DerivationLimits::default());
        let text = render_derivations(&e.complete_parses(&toks("w")).unwrap());
        assert!(text.ends_with("\tNT(X) SHIFT(w) REDUCE\n"));
    }
}
