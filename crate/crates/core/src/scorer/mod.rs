//! Conditional distributions over the next structural action and the next
//! word, given a parser state.
//!
//! A [`Scorer`] supplies `P(action | state)` over the legal action kinds,
//! where `SHIFT` is one outcome, and `P(word | state)` for states at which
//! `SHIFT` is legal. The joint probability of shifting `w` is the product of
//! the two.

mod external;
mod signature;
mod tabular;

use std::sync::Arc;

use thiserror::Error;

pub use external::{serve, ExternalScorer, Query, Reply, Request};
pub use signature::{SigSymbol, SignatureConfig, StateSignature};
pub use tabular::{ExactFitConfig, FitConfig, TabularScorer, UNK};

use crate::transition::{
    apply, legal_actions, Action, ActionKind, DerivationLimits, ParserState, Strategy,
    TransitionError,
};

#[derive(Debug, Error)]
pub enum ScorerError {
    #[error("cannot fit a scorer on an empty treebank")]
    EmptyTreebank,
    #[error("smoothing constant must be positive and finite, got {0}")]
    BadAlpha(f64),
    #[error("no legal actions: the state is terminal")]
    TerminalState,
    #[error("SHIFT is not legal in this state")]
    ShiftIllegal,
    #[error("step {step}: {source}")]
    IllegalSequence {
        step: usize,
        #[source]
        source: TransitionError,
    },
    #[error("step {step}: action {action} exceeds the derivation limits")]
    LimitExceeded { step: usize, action: String },
    #[error("cannot parse state signature {0:?}")]
    BadSignature(String),
    #[error("scorer file: {0}")]
    Format(String),
    #[error("external scorer protocol: {0}")]
    Protocol(String),
    #[error("external scorer i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// A generative model over derivations.
pub trait Scorer: Send + Sync {
    /// Nonterminal labels that `NT` may introduce.
    fn nt_labels(&self) -> &[Arc<str>];

    /// Natural-log probabilities of `candidates` at `state`, aligned with
    /// `candidates` and normalized over them. A zero-probability outcome is
    /// `-inf`.
    fn action_logprobs(
        &self,
        state: &ParserState,
        candidates: &[ActionKind],
    ) -> Result<Vec<f64>, ScorerError>;

    /// Natural-log probability of generating `word` at `state`, given that
    /// the next action is `SHIFT`.
    fn word_logprob(&self, state: &ParserState, word: &str) -> Result<f64, ScorerError>;

    /// The full next-word distribution at `state`.
    fn word_distribution(&self, state: &ParserState) -> Result<Vec<(String, f64)>, ScorerError>;

    /// Hint that `action_logprobs` will soon be asked about each pair, so a
    /// remote scorer can batch the requests.
    fn prefetch_actions(
        &self,
        _batch: &[(&ParserState, Vec<ActionKind>)],
    ) -> Result<(), ScorerError> {
        Ok(())
    }
}

/// The distribution over legal action kinds at `state`.
pub fn action_logprob_dist(
    scorer: &dyn Scorer,
    state: &ParserState,
    strategy: Strategy,
    limits: &DerivationLimits,
) -> Result<Vec<(ActionKind, f64)>, ScorerError> {
    let legal = legal_actions(state, strategy, limits);
    if legal.is_empty() {
        return Err(ScorerError::TerminalState);
    }
    let kinds = legal.kinds(scorer.nt_labels());
    let lps = scorer.action_logprobs(state, &kinds)?;
    Ok(kinds.into_iter().zip(lps).collect())
}

/// The next-word distribution at a state where `SHIFT` is legal.
pub fn word_logprob_dist(
    scorer: &dyn Scorer,
    state: &ParserState,
    strategy: Strategy,
    limits: &DerivationLimits,
) -> Result<Vec<(String, f64)>, ScorerError> {
    if !legal_actions(state, strategy, limits).shift {
        return Err(ScorerError::ShiftIllegal);
    }
    scorer.word_distribution(state)
}

/// Log probability of one step from `state`, including the word for `SHIFT`.
/// The step must be legal under `limits`.
pub fn step_logprob(
    scorer: &dyn Scorer,
    state: &ParserState,
    action: &Action,
    strategy: Strategy,
    limits: &DerivationLimits,
) -> Result<f64, ScorerError> {
    let legal = legal_actions(state, strategy, limits);
    if !legal.permits(action) {
        return Err(ScorerError::LimitExceeded {
            step: 0,
            action: action.to_string(),
        });
    }
    let kind = action.kind();
    let kinds = legal.kinds(scorer.nt_labels());
    let Some(pos) = kinds.iter().position(|k| *k == kind) else {
        // An NT label the scorer has never seen has no probability mass.
        return Ok(f64::NEG_INFINITY);
    };
    let lp = scorer.action_logprobs(state, &kinds)?[pos];
    match action {
        Action::Shift(w) if lp > f64::NEG_INFINITY => Ok(lp + scorer.word_logprob(state, w)?),
        _ => Ok(lp),
    }
}

/// Joint log probability of an action sequence and the words it generates.
pub fn sequence_logprob(
    scorer: &dyn Scorer,
    actions: &[Action],
    strategy: Strategy,
    limits: &DerivationLimits,
) -> Result<f64, ScorerError> {
    let mut state = ParserState::new();
    let mut total = 0.0;
    for (step, a) in actions.iter().enumerate() {
        let next = apply(&state, a, strategy)
            .map_err(|source| ScorerError::IllegalSequence { step, source })?;
        total += step_logprob(scorer, &state, a, strategy, limits).map_err(|e| match e {
            ScorerError::LimitExceeded { action, .. } => {
                ScorerError::LimitExceeded { step, action }
            }
            other => other,
        })?;
        state = next;
    }
    Ok(total)
}
