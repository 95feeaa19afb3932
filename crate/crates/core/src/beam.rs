//! Word-synchronous beam search.
//!
//! Between two words the search expands structural actions layer by layer,
//! keeping the `k_a` best in-progress hypotheses after each layer. Every
//! hypothesis at which `SHIFT` is legal spawns a successor that generates the
//! next word; the `k_w` best of those become the next word beam.

use std::cmp::Ordering;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::logspace::{log_sum_exp, nats_to_bits};
use crate::scorer::{Scorer, ScorerError};
use crate::transition::{
    apply, legal_actions, Action, ActionKind, DerivationLimits, ParserState, Strategy,
};
use crate::treebank::Tree;

#[derive(Debug, Error)]
pub enum BeamError {
    #[error("invalid beam configuration: {0}")]
    Config(String),
    #[error("empty sentence")]
    EmptySentence,
    #[error("beam death at position {position} ({token:?}): no hypothesis generates the word")]
    BeamDeath { position: usize, token: String },
    #[error("no hypothesis completes a tree after the last word")]
    NoCompleteParse,
    #[error(transparent)]
    Scorer(#[from] ScorerError),
}

/// Which shifted successors make up the next word's probability mass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WordMass {
    /// Every shifted successor found during expansion.
    #[default]
    PreTruncation,
    /// Only the `k_w` successors carried forward.
    PostTruncation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BeamConfig {
    pub word_beam: usize,
    pub action_beam: usize,
    #[serde(default)]
    pub limits: DerivationLimits,
    #[serde(default)]
    pub word_mass: WordMass,
}

impl BeamConfig {
    pub fn new(word_beam: usize, action_beam: usize) -> Result<BeamConfig, BeamError> {
        let c = BeamConfig {
            word_beam,
            action_beam,
            limits: DerivationLimits::default(),
            word_mass: WordMass::default(),
        };
        c.validate()?;
        Ok(c)
    }

    pub fn with_limits(mut self, limits: DerivationLimits) -> Self {
        self.limits = limits;
        self
    }

    pub fn with_word_mass(mut self, word_mass: WordMass) -> Self {
        self.word_mass = word_mass;
        self
    }

    pub fn validate(&self) -> Result<(), BeamError> {
        if self.word_beam == 0 || self.action_beam == 0 {
            return Err(BeamError::Config("beam widths must be at least 1".into()));
        }
        self.limits
            .validate()
            .map_err(|e| BeamError::Config(e.to_string()))
    }
}

/// A partial derivation on the beam.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamItem {
    pub actions: Vec<Action>,
    pub state: ParserState,
    /// Joint log probability of the actions and the words they generate.
    pub logprob: f64,
}

impl BeamItem {
    pub fn initial() -> BeamItem {
        BeamItem {
            actions: Vec::new(),
            state: ParserState::new(),
            logprob: 0.0,
        }
    }

    fn extend(&self, action: Action, step_logprob: f64, strategy: Strategy) -> BeamItem {
        let state = apply(&self.state, &action, strategy)
            .expect("successors are generated from legal actions");
        let mut actions = Vec::with_capacity(self.actions.len() + 1);
        actions.extend_from_slice(&self.actions);
        actions.push(action);
        BeamItem {
            actions,
            state,
            logprob: self.logprob + step_logprob,
        }
    }
}

/// Higher log probability first, then lexicographically smaller action
/// sequence.
pub fn beam_order(a: &BeamItem, b: &BeamItem) -> Ordering {
    b.logprob
        .total_cmp(&a.logprob)
        .then_with(|| a.actions.cmp(&b.actions))
}

/// Sorts by [`beam_order`] and keeps the first `k`.
pub fn prune(items: &mut Vec<BeamItem>, k: usize) {
    if items.len() > k {
        items.select_nth_unstable_by(k, beam_order);
        items.truncate(k);
    }
    items.sort_by(beam_order);
}

/// The hypotheses retained after `word_index` words.
#[derive(Debug, Clone, PartialEq)]
pub struct WordBeam {
    pub word_index: usize,
    /// Sorted by [`beam_order`].
    pub items: Vec<BeamItem>,
    /// Log of the summed item probabilities.
    pub prefix_mass: f64,
}

impl WordBeam {
    fn from_items(word_index: usize, items: Vec<BeamItem>) -> WordBeam {
        let prefix_mass = log_sum_exp(items.iter().map(|i| i.logprob));
        WordBeam {
            word_index,
            items,
            prefix_mass,
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

pub fn init_beam(_strategy: Strategy) -> WordBeam {
    WordBeam::from_items(0, vec![BeamItem::initial()])
}

/// A successor step: the action and its log probability, including the word
/// probability for `SHIFT`. Zero-probability steps are omitted.
///
/// `word` selects the token a `SHIFT` would generate; `None` suppresses
/// `SHIFT` successors.
pub(crate) fn successor_steps(
    scorer: &dyn Scorer,
    state: &ParserState,
    strategy: Strategy,
    limits: &DerivationLimits,
    word: Option<&str>,
) -> Result<Vec<(Action, f64)>, ScorerError> {
    let legal = legal_actions(state, strategy, limits);
    if legal.is_empty() {
        return Ok(Vec::new());
    }
    let kinds = legal.kinds(scorer.nt_labels());
    let lps = scorer.action_logprobs(state, &kinds)?;
    let mut out = Vec::with_capacity(kinds.len());
    for (kind, lp) in kinds.into_iter().zip(lps) {
        if lp == f64::NEG_INFINITY {
            continue;
        }
        match kind {
            ActionKind::Shift => {
                if let Some(w) = word {
                    let wlp = scorer.word_logprob(state, w)?;
                    if wlp > f64::NEG_INFINITY {
                        out.push((Action::shift(w), lp + wlp));
                    }
                }
            }
            ActionKind::Nt(l) => out.push((Action::Nt(l), lp)),
            ActionKind::Reduce => out.push((Action::Reduce, lp)),
        }
    }
    Ok(out)
}

enum Goal<'a> {
    Shift(&'a str),
    Complete,
}

/// Expands structural actions from `start` until no in-progress hypothesis
/// remains; returns every hypothesis that reached the goal, unsorted.
fn expand(
    start: &[BeamItem],
    goal: Goal<'_>,
    scorer: &dyn Scorer,
    strategy: Strategy,
    config: &BeamConfig,
) -> Result<Vec<BeamItem>, ScorerError> {
    let word = match goal {
        Goal::Shift(w) => Some(w),
        Goal::Complete => None,
    };
    let mut reached = Vec::new();
    let mut layer: Vec<BeamItem> = start.to_vec();
    while !layer.is_empty() {
        let batch: Vec<(&ParserState, Vec<ActionKind>)> = layer
            .iter()
            .map(|it| {
                let legal = legal_actions(&it.state, strategy, &config.limits);
                (&it.state, legal.kinds(scorer.nt_labels()))
            })
            .filter(|(_, k)| !k.is_empty())
            .collect();
        scorer.prefetch_actions(&batch)?;
        let mut next = Vec::new();
        for item in &layer {
            if word.is_none() && item.state.is_terminal() {
                // Completed trees end the derivation; extending them would
                // count the same sentence twice.
                reached.push(item.clone());
                continue;
            }
            for (action, lp) in
                successor_steps(scorer, &item.state, strategy, &config.limits, word)?
            {
                let shifted = matches!(action, Action::Shift(_));
                let succ = item.extend(action, lp, strategy);
                if shifted {
                    reached.push(succ);
                } else {
                    next.push(succ);
                }
            }
        }
        prune(&mut next, config.action_beam);
        layer = next;
    }
    Ok(reached)
}

/// Result of consuming one word.
#[derive(Debug, Clone, PartialEq)]
pub struct Advance {
    pub beam: WordBeam,
    /// Beam-renormalized log probability of the word, per the configured
    /// [`WordMass`].
    pub word_logmass: f64,
    pub pre_truncation_logmass: f64,
    pub post_truncation_logmass: f64,
    /// Log of the summed successor probabilities, without renormalization.
    pub unnormalized_logmass: f64,
    pub successors: usize,
}

/// Consumes `next` from `beam`.
pub fn advance_word(
    beam: &WordBeam,
    next: &str,
    scorer: &dyn Scorer,
    strategy: Strategy,
    config: &BeamConfig,
) -> Result<Advance, BeamError> {
    config.validate()?;
    let death = || BeamError::BeamDeath {
        position: beam.word_index,
        token: next.to_string(),
    };
    if beam.is_empty() {
        return Err(death());
    }
    let mut shifted = expand(&beam.items, Goal::Shift(next), scorer, strategy, config)?;
    if shifted.is_empty() {
        return Err(death());
    }
    let successors = shifted.len();
    let all = log_sum_exp(shifted.iter().map(|i| i.logprob));
    prune(&mut shifted, config.word_beam);
    let next_beam = WordBeam::from_items(beam.word_index + 1, shifted);
    let pre = all - beam.prefix_mass;
    let post = next_beam.prefix_mass - beam.prefix_mass;
    Ok(Advance {
        word_logmass: match config.word_mass {
            WordMass::PreTruncation => pre,
            WordMass::PostTruncation => post,
        },
        pre_truncation_logmass: pre,
        post_truncation_logmass: post,
        unnormalized_logmass: all,
        successors,
        beam: next_beam,
    })
}

/// Completed derivations reachable from `beam` without generating another
/// word, sorted by [`beam_order`].
pub fn complete(
    beam: &WordBeam,
    scorer: &dyn Scorer,
    strategy: Strategy,
    config: &BeamConfig,
) -> Result<Vec<BeamItem>, BeamError> {
    let mut done = expand(&beam.items, Goal::Complete, scorer, strategy, config)?;
    done.sort_by(beam_order);
    Ok(done)
}

/// Per-word statistics of one search.
#[derive(Debug, Clone, PartialEq)]
pub struct WordStat {
    pub token: String,
    pub surprisal_bits: f64,
    pub word_logmass: f64,
    pub unnormalized_logmass: f64,
    /// Prefix mass of the beam after this word.
    pub beam_mass_log: f64,
    pub n_items: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SentenceSurprisal {
    pub words: Vec<WordStat>,
    /// Surprisal of completing the structure after the last word; infinite
    /// if no completion was found.
    pub eos_surprisal_bits: f64,
    /// `snapshots[i]` is the beam after `i` words; `snapshots[0]` is the
    /// initial beam.
    pub snapshots: Vec<WordBeam>,
}

impl SentenceSurprisal {
    pub fn surprisals(&self) -> Vec<f64> {
        self.words.iter().map(|w| w.surprisal_bits).collect()
    }
}

pub fn surprisal_per_word(
    sentence: &[String],
    scorer: &dyn Scorer,
    strategy: Strategy,
    config: &BeamConfig,
) -> Result<SentenceSurprisal, BeamError> {
    if sentence.is_empty() {
        return Err(BeamError::EmptySentence);
    }
    config.validate()?;
    let mut snapshots = vec![init_beam(strategy)];
    let mut words = Vec::with_capacity(sentence.len());
    for tok in sentence {
        let adv = advance_word(
            snapshots.last().expect("nonempty"),
            tok,
            scorer,
            strategy,
            config,
        )?;
        words.push(WordStat {
            token: tok.clone(),
            surprisal_bits: nats_to_bits(adv.word_logmass),
            word_logmass: adv.word_logmass,
            unnormalized_logmass: adv.unnormalized_logmass,
            beam_mass_log: adv.beam.prefix_mass,
            n_items: adv.beam.len(),
        });
        snapshots.push(adv.beam);
    }
    let last = snapshots.last().expect("nonempty");
    let done = complete(last, scorer, strategy, config)?;
    let eos = log_sum_exp(done.iter().map(|i| i.logprob)) - last.prefix_mass;
    Ok(SentenceSurprisal {
        words,
        eos_surprisal_bits: nats_to_bits(eos),
        snapshots,
    })
}

/// The most probable completed derivation found by the search.
pub fn best_parse(
    sentence: &[String],
    scorer: &dyn Scorer,
    strategy: Strategy,
    config: &BeamConfig,
) -> Result<(Tree, BeamItem), BeamError> {
    let run = surprisal_per_word(sentence, scorer, strategy, config)?;
    let done = complete(
        run.snapshots.last().expect("nonempty"),
        scorer,
        strategy,
        config,
    )?;
    let best = done.into_iter().next().ok_or(BeamError::NoCompleteParse)?;
    let tree = best
        .state
        .tree()
        .expect("completed items hold a tree")
        .clone();
    Ok((tree, best))
}

/// Text dump of beam snapshots: one line per item with the position, the
/// rank, the log probability and the action sequence.
pub fn dump_snapshots(snapshots: &[WordBeam]) -> String {
    let mut out = String::new();
    for b in snapshots {
        for (rank, it) in b.items.iter().enumerate() {
            let acts: Vec<String> = it.actions.iter().map(|a| a.to_string()).collect();
            let _ = writeln!(
                out,
                "{}\t{}\t{:.17e}\t{}",
                b.word_index,
                rank,
                it.logprob,
                acts.join(" ")
            );
        }
    }
    out
}
