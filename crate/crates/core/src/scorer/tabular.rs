use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Scorer, ScorerError, SignatureConfig, StateSignature};
use crate::transition::{apply, oracle, Action, ActionKind, ParserState, Strategy};
use crate::treebank::{Treebank, WeightedTree};

/// Stand-in for words below the frequency threshold.
pub const UNK: &str = "<unk>";

const FORMAT: &str = "beamsurp-tabular-v1";

/// Settings for fitting a smoothed scorer on a treebank.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub signature: SignatureConfig,
    /// Additive smoothing for both the action and the word tables.
    pub alpha: f64,
    /// Words seen fewer times than this are mapped to [`UNK`].
    pub min_word_count: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            signature: SignatureConfig::default(),
            alpha: 0.1,
            min_word_count: 2,
        }
    }
}

/// Settings for an exact relative-frequency scorer over a weighted
/// treebank. Action probabilities are unsmoothed, so derivations the
/// treebank never uses get probability zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExactFitConfig {
    pub signature: SignatureConfig,
    /// Additive smoothing for the word table only; may be zero.
    pub word_smoothing: f64,
}

impl Default for ExactFitConfig {
    fn default() -> Self {
        ExactFitConfig {
            signature: SignatureConfig {
                top_entries: 64,
                open_clip: 64,
                lexical: true,
            },
            word_smoothing: 0.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
struct WordCounts {
    total: f64,
    counts: BTreeMap<Arc<str>, f64>,
}

/// Count-based scorer keyed on [`StateSignature`]s.
///
/// `P(a | s) = (c(s, a) + alpha) / (sum over legal a' of c(s, a') + alpha * |legal|)`
/// and `P(w | s) = (c(s, w) + beta) / (c(s) + beta * |V|)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "ScorerFile", try_from = "ScorerFile")]
pub struct TabularScorer {
    strategy: Strategy,
    signature: SignatureConfig,
    action_alpha: f64,
    word_alpha: f64,
    unk: Option<Arc<str>>,
    labels: Vec<Arc<str>>,
    /// Sorted.
    vocab: Vec<Arc<str>>,
    actions: BTreeMap<StateSignature, BTreeMap<ActionKind, f64>>,
    words: BTreeMap<StateSignature, WordCounts>,
}

impl TabularScorer {
    /// Fits the smoothed scorer on the canonical derivations of `treebank`.
    pub fn fit(
        treebank: &Treebank,
        strategy: Strategy,
        cfg: &FitConfig,
    ) -> Result<TabularScorer, ScorerError> {
        if treebank.is_empty() {
            return Err(ScorerError::EmptyTreebank);
        }
        if !(cfg.alpha.is_finite() && cfg.alpha > 0.0) {
            return Err(ScorerError::BadAlpha(cfg.alpha));
        }
        let mut freq: BTreeMap<String, usize> = BTreeMap::new();
        for t in &treebank.trees {
            for w in t.yield_words() {
                *freq.entry(w).or_default() += 1;
            }
        }
        let mut vocab: BTreeSet<Arc<str>> = freq
            .into_iter()
            .filter(|(_, c)| *c >= cfg.min_word_count)
            .map(|(w, _)| Arc::from(w))
            .collect();
        vocab.insert(Arc::from(UNK));
        let mut s = TabularScorer::empty(
            strategy,
            cfg.signature,
            cfg.alpha,
            cfg.alpha,
            Some(Arc::from(UNK)),
            vocab,
        );
        for t in &treebank.trees {
            s.count_derivation(&oracle(t, strategy), 1.0);
        }
        s.collect_labels();
        Ok(s)
    }

    /// Relative-frequency scorer over a weighted treebank.
    pub fn fit_exact(
        trees: &[WeightedTree],
        strategy: Strategy,
        cfg: &ExactFitConfig,
    ) -> Result<TabularScorer, ScorerError> {
        if trees.is_empty() {
            return Err(ScorerError::EmptyTreebank);
        }
        if !(cfg.word_smoothing.is_finite() && cfg.word_smoothing >= 0.0) {
            return Err(ScorerError::BadAlpha(cfg.word_smoothing));
        }
        let vocab = trees
            .iter()
            .flat_map(|wt| wt.tree.yield_words())
            .map(Arc::from)
            .collect();
        let mut s = TabularScorer::empty(
            strategy,
            cfg.signature,
            0.0,
            cfg.word_smoothing,
            None,
            vocab,
        );
        for wt in trees {
            s.count_derivation(&oracle(&wt.tree, strategy), wt.weight);
        }
        s.collect_labels();
        Ok(s)
    }

    fn empty(
        strategy: Strategy,
        signature: SignatureConfig,
        action_alpha: f64,
        word_alpha: f64,
        unk: Option<Arc<str>>,
        vocab: BTreeSet<Arc<str>>,
    ) -> TabularScorer {
        TabularScorer {
            strategy,
            signature,
            action_alpha,
            word_alpha,
            unk,
            labels: Vec::new(),
            vocab: vocab.into_iter().collect(),
            actions: BTreeMap::new(),
            words: BTreeMap::new(),
        }
    }

    fn count_derivation(&mut self, actions: &[Action], weight: f64) {
        let mut state = ParserState::new();
        for a in actions {
            let sig = self.signature_of(&state);
            *self
                .actions
                .entry(sig.clone())
                .or_default()
                .entry(a.kind())
                .or_default() += weight;
            if let Action::Shift(w) = a {
                let w = self
                    .vocab_word(w)
                    .expect("training words are in the vocabulary");
                let wc = self.words.entry(sig).or_default();
                wc.total += weight;
                *wc.counts.entry(w).or_default() += weight;
            }
            state = apply(&state, a, self.strategy).expect("canonical derivations are legal");
        }
    }

    fn collect_labels(&mut self) {
        let labels: BTreeSet<Arc<str>> = self
            .actions
            .values()
            .flat_map(|m| m.keys())
            .filter_map(|k| match k {
                ActionKind::Nt(l) => Some(l.clone()),
                _ => None,
            })
            .collect();
        self.labels = labels.into_iter().collect();
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn signature_config(&self) -> &SignatureConfig {
        &self.signature
    }

    pub fn vocabulary(&self) -> &[Arc<str>] {
        &self.vocab
    }

    pub fn labels(&self) -> &[Arc<str>] {
        &self.labels
    }

    /// Number of distinct signatures with action counts.
    pub fn signature_count(&self) -> usize {
        self.actions.len()
    }

    /// Raw count of `kind` at `sig`.
    pub fn action_count(&self, sig: &StateSignature, kind: &ActionKind) -> f64 {
        self.actions
            .get(sig)
            .and_then(|m| m.get(kind))
            .copied()
            .unwrap_or(0.0)
    }

    /// The vocabulary entry standing for `word`, if any.
    fn vocab_word(&self, word: &str) -> Option<Arc<str>> {
        match self.vocab.binary_search_by(|v| (**v).cmp(word)) {
            Ok(i) => Some(self.vocab[i].clone()),
            Err(_) => self.unk.clone(),
        }
    }

    /// Maps out-of-vocabulary words in `sig` to [`UNK`].
    pub fn normalize_signature(&self, sig: StateSignature) -> StateSignature {
        sig.map_words(|w| self.vocab_word(w).unwrap_or_else(|| w.clone()))
    }

    pub fn signature_of(&self, state: &ParserState) -> StateSignature {
        self.normalize_signature(StateSignature::of(state, &self.signature))
    }

    /// Action log probabilities at a (normalized) signature.
    pub fn action_logprobs_at(&self, sig: &StateSignature, candidates: &[ActionKind]) -> Vec<f64> {
        let counts = self.actions.get(sig);
        let c: Vec<f64> = candidates
            .iter()
            .map(|k| counts.and_then(|m| m.get(k)).copied().unwrap_or(0.0))
            .collect();
        let denom = c.iter().sum::<f64>() + self.action_alpha * candidates.len() as f64;
        c.into_iter()
            .map(|x| ratio_ln(x + self.action_alpha, denom))
            .collect()
    }

    /// Log probability of `word` at a (normalized) signature.
    pub fn word_logprob_at(&self, sig: &StateSignature, word: &str) -> f64 {
        let Some(w) = self.vocab_word(word) else {
            return f64::NEG_INFINITY;
        };
        let wc = self.words.get(sig);
        let c = wc.and_then(|m| m.counts.get(&w)).copied().unwrap_or(0.0);
        let total = wc.map_or(0.0, |m| m.total);
        ratio_ln(
            c + self.word_alpha,
            total + self.word_alpha * self.vocab.len() as f64,
        )
    }

    pub fn word_distribution_at(&self, sig: &StateSignature) -> Vec<(String, f64)> {
        let wc = self.words.get(sig);
        let total = wc.map_or(0.0, |m| m.total);
        let denom = total + self.word_alpha * self.vocab.len() as f64;
        self.vocab
            .iter()
            .map(|w| {
                let c = wc.and_then(|m| m.counts.get(w)).copied().unwrap_or(0.0);
                (w.to_string(), ratio_ln(c + self.word_alpha, denom))
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scorer tables serialize")
    }

    pub fn from_json(text: &str) -> Result<TabularScorer, ScorerError> {
        serde_json::from_str(text).map_err(|e| ScorerError::Format(e.to_string()))
    }
}

fn ratio_ln(num: f64, denom: f64) -> f64 {
    if num <= 0.0 || denom <= 0.0 {
        f64::NEG_INFINITY
    } else {
        (num / denom).ln()
    }
}

impl Scorer for TabularScorer {
    fn nt_labels(&self) -> &[Arc<str>] {
        &self.labels
    }

    fn action_logprobs(
        &self,
        state: &ParserState,
        candidates: &[ActionKind],
    ) -> Result<Vec<f64>, ScorerError> {
        Ok(self.action_logprobs_at(&self.signature_of(state), candidates))
    }

    fn word_logprob(&self, state: &ParserState, word: &str) -> Result<f64, ScorerError> {
        Ok(self.word_logprob_at(&self.signature_of(state), word))
    }

    fn word_distribution(&self, state: &ParserState) -> Result<Vec<(String, f64)>, ScorerError> {
        Ok(self.word_distribution_at(&self.signature_of(state)))
    }
}

/// On-disk form. Maps are keyed by the text forms of signatures, actions
/// and words so the file is stable and readable.
#[derive(Serialize, Deserialize)]
struct ScorerFile {
    format: String,
    strategy: Strategy,
    signature: SignatureConfig,
    action_alpha: f64,
    word_alpha: f64,
    unk: Option<String>,
    labels: Vec<String>,
    vocabulary: Vec<String>,
    actions: BTreeMap<String, BTreeMap<String, f64>>,
    words: BTreeMap<String, BTreeMap<String, f64>>,
}

impl From<TabularScorer> for ScorerFile {
    fn from(s: TabularScorer) -> Self {
        ScorerFile {
            format: FORMAT.to_string(),
            strategy: s.strategy,
            signature: s.signature,
            action_alpha: s.action_alpha,
            word_alpha: s.word_alpha,
            unk: s.unk.map(|u| u.to_string()),
            labels: s.labels.iter().map(|l| l.to_string()).collect(),
            vocabulary: s.vocab.iter().map(|w| w.to_string()).collect(),
            actions: s
                .actions
                .iter()
                .map(|(sig, m)| {
                    (
                        sig.to_string(),
                        m.iter().map(|(k, c)| (k.to_string(), *c)).collect(),
                    )
                })
                .collect(),
            words: s
                .words
                .iter()
                .map(|(sig, m)| {
                    (
                        sig.to_string(),
                        m.counts.iter().map(|(w, c)| (w.to_string(), *c)).collect(),
                    )
                })
                .collect(),
        }
    }
}

impl TryFrom<ScorerFile> for TabularScorer {
    type Error = String;

    fn try_from(f: ScorerFile) -> Result<Self, Self::Error> {
        if f.format != FORMAT {
            return Err(format!("unsupported scorer format {:?}", f.format));
        }
        let nonneg = |x: f64| x.is_finite() && x >= 0.0;
        if !nonneg(f.action_alpha) || !nonneg(f.word_alpha) {
            return Err("smoothing constants must be finite and non-negative".into());
        }
        let vocab: BTreeSet<Arc<str>> =
            f.vocabulary.iter().map(|w| Arc::from(w.as_str())).collect();
        if let Some(u) = &f.unk {
            if !vocab.contains(u.as_str()) {
                return Err("the unknown-word token must be in the vocabulary".into());
            }
        }
        let mut s = TabularScorer::empty(
            f.strategy,
            f.signature,
            f.action_alpha,
            f.word_alpha,
            f.unk.map(Arc::from),
            vocab,
        );
        for (sig, m) in f.actions {
            let sig: StateSignature = sig.parse().map_err(|e: ScorerError| e.to_string())?;
            let mut row = BTreeMap::new();
            for (k, c) in m {
                let k: ActionKind = k.parse().map_err(|e| format!("{e}"))?;
                if !nonneg(c) {
                    return Err(format!("bad count {c} at {sig}"));
                }
                row.insert(k, c);
            }
            s.actions.insert(sig, row);
        }
        for (sig, m) in f.words {
            let sig: StateSignature = sig.parse().map_err(|e: ScorerError| e.to_string())?;
            let mut wc = WordCounts::default();
            for (w, c) in m {
                let Some(w) = s.vocab.iter().find(|v| ***v == *w).cloned() else {
                    return Err(format!("word {w:?} at {sig} is not in the vocabulary"));
                };
                if !nonneg(c) {
                    return Err(format!("bad count {c} at {sig}"));
                }
                wc.total += c;
                wc.counts.insert(w, c);
            }
            s.words.insert(sig, wc);
        }
        s.labels = f.labels.iter().map(|l| Arc::from(l.as_str())).collect();
        Ok(s)
    }
}
