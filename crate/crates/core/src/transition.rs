//! Generative transition systems over constituency trees.
//!
//! Two strategies share one action vocabulary (`NT(X)`, `SHIFT(w)`, `REDUCE`):
//!
//! * **Top-down**: `NT(X)` opens `X` before any of its words are seen
//!   (pre-order derivation).
//! * **Left-corner**, realized as the in-order system: a word is shifted
//!   first, `NT(X)` then projects `X` over the completed entry on top of the
//!   stack, making it `X`'s first child.
//!
//! In both systems `REDUCE` closes the innermost open nonterminal.
//!
//! The parser state is a persistent stack, so successor states share
//! everything below the top frame. An open entry's children so far are its
//! projected first child (left-corner only) followed by the completed entries
//! stacked above it; `REDUCE` gathers them into the finished constituent.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::treebank::{valid_symbol, Tree};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransitionError {
    #[error("action {action} is illegal in this state")]
    Illegal { action: String },
    #[error("cannot parse action {0:?}")]
    BadAction(String),
    #[error("line {line}: cannot parse action {text:?}")]
    BadActionLine { line: usize, text: String },
    #[error("unknown strategy {0:?} (expected `top-down` or `left-corner`)")]
    BadStrategy(String),
    #[error("derivation limits must be at least 1")]
    BadLimits,
    #[error("derivation did not reach a terminal state")]
    Incomplete,
}

/// A transition-system action.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    Nt(Arc<str>),
    Shift(Arc<str>),
    Reduce,
}

impl Action {
    pub fn nt(label: &str) -> Action {
        Action::Nt(Arc::from(label))
    }

    pub fn shift(token: &str) -> Action {
        Action::Shift(Arc::from(token))
    }

    pub fn kind(&self) -> ActionKind {
        match self {
            Action::Nt(l) => ActionKind::Nt(l.clone()),
            Action::Shift(_) => ActionKind::Shift,
            Action::Reduce => ActionKind::Reduce,
        }
    }

    pub fn is_structural(&self) -> bool {
        !matches!(self, Action::Shift(_))
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Nt(l) => write!(f, "NT({l})"),
            Action::Shift(w) => write!(f, "SHIFT({w})"),
            Action::Reduce => f.write_str("REDUCE"),
        }
    }
}

fn parenthesized<'a>(s: &'a str, head: &str) -> Option<&'a str> {
    let inner = s.strip_prefix(head)?.strip_prefix('(')?.strip_suffix(')')?;
    valid_symbol(inner).then_some(inner)
}

impl FromStr for Action {
    type Err = TransitionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "REDUCE" {
            Ok(Action::Reduce)
        } else if let Some(l) = parenthesized(s, "NT") {
            Ok(Action::nt(l))
        } else if let Some(w) = parenthesized(s, "SHIFT") {
            Ok(Action::shift(w))
        } else {
            Err(TransitionError::BadAction(s.to_string()))
        }
    }
}

impl Serialize for Action {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Action {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// An action with the shifted word abstracted away: the outcome space of the
/// structural action distribution, where `SHIFT` is a single outcome.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ActionKind {
    Nt(Arc<str>),
    Shift,
    Reduce,
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ActionKind::Nt(l) => write!(f, "NT({l})"),
            ActionKind::Shift => f.write_str("SHIFT"),
            ActionKind::Reduce => f.write_str("REDUCE"),
        }
    }
}

impl FromStr for ActionKind {
    type Err = TransitionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "SHIFT" => Ok(ActionKind::Shift),
            "REDUCE" => Ok(ActionKind::Reduce),
            other => parenthesized(other, "NT")
                .map(|l| ActionKind::Nt(Arc::from(l)))
                .ok_or_else(|| TransitionError::BadAction(other.to_string())),
        }
    }
}

impl Serialize for ActionKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ActionKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Parses the one-action-per-line text format. Blank lines are ignored.
pub fn parse_actions(text: &str) -> Result<Vec<Action>, TransitionError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.parse().map_err(|_| TransitionError::BadActionLine {
                line: i + 1,
                text: l.to_string(),
            })
        })
        .collect()
}

pub fn render_actions(actions: &[Action]) -> String {
    let mut s = String::new();
    for a in actions {
        s.push_str(&a.to_string());
        s.push('\n');
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    TopDown,
    LeftCorner,
}

impl Strategy {
    pub const ALL: [Strategy; 2] = [Strategy::TopDown, Strategy::LeftCorner];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::TopDown => "top-down",
            Strategy::LeftCorner => "left-corner",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = TransitionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "top-down" | "topdown" | "td" => Ok(Strategy::TopDown),
            "left-corner" | "leftcorner" | "lc" | "in-order" => Ok(Strategy::LeftCorner),
            _ => Err(TransitionError::BadStrategy(s.to_string())),
        }
    }
}

/// Bounds that keep the derivation space finite during search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DerivationLimits {
    pub max_open_nonterminals: usize,
    /// Counts both `NT` and `REDUCE` actions since the last `SHIFT`.
    pub max_structural_actions_between_words: usize,
}

impl Default for DerivationLimits {
    fn default() -> Self {
        DerivationLimits {
            max_open_nonterminals: 20,
            max_structural_actions_between_words: 40,
        }
    }
}

impl DerivationLimits {
    pub fn new(max_open: usize, max_between: usize) -> Result<Self, TransitionError> {
        let l = DerivationLimits {
            max_open_nonterminals: max_open,
            max_structural_actions_between_words: max_between,
        };
        l.validate()?;
        Ok(l)
    }

    pub fn validate(&self) -> Result<(), TransitionError> {
        if self.max_open_nonterminals == 0 || self.max_structural_actions_between_words == 0 {
            return Err(TransitionError::BadLimits);
        }
        Ok(())
    }

    /// Limits that never bind for derivations of trees this size.
    pub fn unbounded() -> Self {
        DerivationLimits {
            max_open_nonterminals: usize::MAX,
            max_structural_actions_between_words: usize::MAX,
        }
    }
}

/// A stack entry.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Entry {
    /// An open nonterminal; `first` holds the projected left corner.
    Open {
        label: Arc<str>,
        first: Option<Tree>,
    },
    Done(Tree),
}

impl Entry {
    fn leaf_count(&self) -> usize {
        match self {
            Entry::Open { first, .. } => first.as_ref().map_or(0, Tree::leaf_count),
            Entry::Done(t) => t.leaf_count(),
        }
    }

    pub fn is_open(&self) -> bool {
        matches!(self, Entry::Open { .. })
    }
}

#[derive(Debug)]
struct Frame {
    entry: Entry,
    below: Option<Arc<Frame>>,
}

/// Incremental derivation state.
#[derive(Debug, Clone, Default)]
pub struct ParserState {
    top: Option<Arc<Frame>>,
    depth: usize,
    words: usize,
    open: usize,
    since_word: usize,
}

impl PartialEq for ParserState {
    fn eq(&self, other: &Self) -> bool {
        self.depth == other.depth
            && self.words == other.words
            && self.open == other.open
            && self.since_word == other.since_word
            && self.entries_from_top().eq(other.entries_from_top())
    }
}

impl Eq for ParserState {}

/// The legal action kinds at a state; `nt` admits every nonterminal label the
/// scorer knows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LegalActions {
    pub nt: bool,
    pub shift: bool,
    pub reduce: bool,
}

impl LegalActions {
    pub fn is_empty(&self) -> bool {
        !(self.nt || self.shift || self.reduce)
    }

    /// Concrete outcome kinds, with `NT` expanded over `labels`. Order: `NT`
    /// labels in the given order, then `SHIFT`, then `REDUCE`.
    pub fn kinds(&self, labels: &[Arc<str>]) -> Vec<ActionKind> {
        let mut out = Vec::new();
        if self.nt {
            out.extend(labels.iter().cloned().map(ActionKind::Nt));
        }
        if self.shift {
            out.push(ActionKind::Shift);
        }
        if self.reduce {
            out.push(ActionKind::Reduce);
        }
        out
    }

    pub fn permits(&self, action: &Action) -> bool {
        match action {
            Action::Nt(_) => self.nt,
            Action::Shift(_) => self.shift,
            Action::Reduce => self.reduce,
        }
    }
}

impl ParserState {
    pub fn new() -> Self {
        ParserState::default()
    }

    pub fn words_generated(&self) -> usize {
        self.words
    }

    pub fn open_count(&self) -> usize {
        self.open
    }

    pub fn stack_len(&self) -> usize {
        self.depth
    }

    pub fn structural_since_word(&self) -> usize {
        self.since_word
    }

    pub fn is_empty(&self) -> bool {
        self.depth == 0
    }

    /// Stack entries from the top down.
    pub fn entries_from_top(&self) -> impl Iterator<Item = &Entry> + '_ {
        let mut cur = self.top.as_deref();
        std::iter::from_fn(move || {
            let f = cur?;
            cur = f.below.as_deref();
            Some(&f.entry)
        })
    }

    /// Stack entries from the bottom up.
    pub fn entries(&self) -> Vec<&Entry> {
        let mut v: Vec<_> = self.entries_from_top().collect();
        v.reverse();
        v
    }

    fn top_entry(&self) -> Option<&Entry> {
        self.top.as_deref().map(|f| &f.entry)
    }

    /// True iff the stack holds exactly one completed constituent.
    pub fn is_terminal(&self) -> bool {
        self.depth == 1
            && self.open == 0
            && matches!(self.top_entry(), Some(Entry::Done(Tree::Node(_))))
    }

    /// The finished tree of a terminal state.
    pub fn tree(&self) -> Option<&Tree> {
        match self.top_entry() {
            Some(Entry::Done(t)) if self.is_terminal() => Some(t),
            _ => None,
        }
    }

    fn structurally_legal(&self, strategy: Strategy) -> LegalActions {
        let top = self.top_entry();
        let reducible = self.open > 0
            && matches!(
                top,
                Some(Entry::Done(_)) | Some(Entry::Open { first: Some(_), .. })
            );
        match strategy {
            Strategy::TopDown => LegalActions {
                nt: self.depth == 0 || self.open > 0,
                shift: self.open > 0,
                reduce: reducible,
            },
            Strategy::LeftCorner => LegalActions {
                nt: matches!(top, Some(Entry::Done(_))),
                shift: self.depth == 0 || self.open > 0,
                reduce: reducible,
            },
        }
    }

    /// Labels on the path from the `token_index`-th generated leaf to the
    /// root of its partial structure, innermost first. Open nonterminals that
    /// will dominate the leaf count as ancestors. `None` if the token has not
    /// been generated.
    pub fn ancestor_labels(&self, token_index: usize) -> Option<Vec<Arc<str>>> {
        fn path_in(t: &Tree, mut k: usize, out: &mut Vec<Arc<str>>) -> bool {
            let mut node = t;
            let mut path = Vec::new();
            loop {
                match node {
                    Tree::Leaf(_) => {
                        out.extend(path.into_iter().rev());
                        return true;
                    }
                    Tree::Node(n) => {
                        path.push(n.label_arc().clone());
                        let mut next = None;
                        for c in n.children() {
                            let lc = c.leaf_count();
                            if k < lc {
                                next = Some(c);
                                break;
                            }
                            k -= lc;
                        }
                        match next {
                            Some(c) => node = c,
                            None => return false,
                        }
                    }
                }
            }
        }

        if token_index >= self.words {
            return None;
        }
        let entries = self.entries();
        let mut offset = 0;
        for (i, e) in entries.iter().enumerate() {
            let n = e.leaf_count();
            if token_index < offset + n {
                let mut out = Vec::new();
                let local = token_index - offset;
                match e {
                    Entry::Done(t) => {
                        path_in(t, local, &mut out);
                    }
                    Entry::Open { label, first } => {
                        path_in(first.as_ref()?, local, &mut out);
                        out.push(label.clone());
                    }
                }
                for below in entries[..i].iter().rev() {
                    if let Entry::Open { label, .. } = below {
                        out.push(label.clone());
                    }
                }
                return Some(out);
            }
            offset += n;
        }
        None
    }
}

fn frame(entry: Entry, below: Option<Arc<Frame>>) -> Option<Arc<Frame>> {
    Some(Arc::new(Frame { entry, below }))
}

/// The legal actions at `state`, honoring `limits`. Empty only for terminal
/// states.
pub fn legal_actions(
    state: &ParserState,
    strategy: Strategy,
    limits: &DerivationLimits,
) -> LegalActions {
    let mut legal = state.structurally_legal(strategy);
    let budget_left = state.since_word < limits.max_structural_actions_between_words;
    legal.nt &= budget_left && state.open < limits.max_open_nonterminals;
    legal.reduce &= budget_left;
    legal
}

/// Applies `action`, checking structural legality (limits are not checked).
pub fn apply(
    state: &ParserState,
    action: &Action,
    strategy: Strategy,
) -> Result<ParserState, TransitionError> {
    if !state.structurally_legal(strategy).permits(action) {
        return Err(TransitionError::Illegal {
            action: action.to_string(),
        });
    }
    let mut next = state.clone();
    match action {
        Action::Nt(label) => {
            let (first, below) = match strategy {
                Strategy::TopDown => (None, state.top.clone()),
                Strategy::LeftCorner => {
                    let f = state.top.as_deref().expect("legal NT implies a top entry");
                    match &f.entry {
                        Entry::Done(t) => (Some(t.clone()), f.below.clone()),
                        Entry::Open { .. } => unreachable!("legal NT implies a completed top"),
                    }
                }
            };
            if strategy == Strategy::TopDown {
                next.depth += 1;
            }
            next.top = frame(
                Entry::Open {
                    label: label.clone(),
                    first,
                },
                below,
            );
            next.open += 1;
            next.since_word += 1;
        }
        Action::Shift(w) => {
            next.depth += 1;
            next.top = frame(Entry::Done(Tree::Leaf(w.clone())), state.top.clone());
            next.words += 1;
            next.since_word = 0;
        }
        Action::Reduce => {
            let mut children = Vec::new();
            let mut cur = state.top.clone();
            loop {
                let f = cur.expect("legal REDUCE implies an open entry");
                next.depth -= 1;
                match &f.entry {
                    Entry::Done(t) => {
                        children.push(t.clone());
                        cur = f.below.clone();
                    }
                    Entry::Open { label, first } => {
                        children.extend(first.iter().cloned());
                        children.reverse();
                        let node = Tree::from_parts(label.clone(), children)
                            .expect("legal REDUCE implies at least one child");
                        next.depth += 1;
                        next.top = frame(Entry::Done(node), f.below.clone());
                        break;
                    }
                }
            }
            next.open -= 1;
            next.since_word += 1;
        }
    }
    Ok(next)
}

/// Replays `actions` from the empty state.
pub fn replay(actions: &[Action], strategy: Strategy) -> Result<ParserState, TransitionError> {
    actions
        .iter()
        .try_fold(ParserState::new(), |s, a| apply(&s, a, strategy))
}

/// Replays `actions` and returns the derived tree.
pub fn replay_tree(actions: &[Action], strategy: Strategy) -> Result<Tree, TransitionError> {
    replay(actions, strategy)?
        .tree()
        .cloned()
        .ok_or(TransitionError::Incomplete)
}

/// The canonical derivation of `tree`: pre-order for top-down, in-order for
/// left-corner.
pub fn oracle(tree: &Tree, strategy: Strategy) -> Vec<Action> {
    fn top_down(t: &Tree, out: &mut Vec<Action>) {
        match t {
            Tree::Leaf(w) => out.push(Action::Shift(w.clone())),
            Tree::Node(n) => {
                out.push(Action::Nt(n.label_arc().clone()));
                n.children().iter().for_each(|c| top_down(c, out));
                out.push(Action::Reduce);
            }
        }
    }
    fn in_order(t: &Tree, out: &mut Vec<Action>) {
        match t {
            Tree::Leaf(w) => out.push(Action::Shift(w.clone())),
            Tree::Node(n) => {
                let (first, rest) = n.children().split_first().expect("nodes have children");
                in_order(first, out);
                out.push(Action::Nt(n.label_arc().clone()));
                rest.iter().for_each(|c| in_order(c, out));
                out.push(Action::Reduce);
            }
        }
    }
    let mut out = Vec::new();
    match strategy {
        Strategy::TopDown => top_down(tree, &mut out),
        Strategy::LeftCorner => in_order(tree, &mut out),
    }
    out
}
