use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::ScorerError;
use crate::transition::{Entry, ParserState};
use crate::treebank::{valid_symbol, Tree};

/// How much of the parser state a signature keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SignatureConfig {
    /// Number of stack entries, counted from the top.
    pub top_entries: usize,
    /// Open-nonterminal counts at or above this value are merged.
    pub open_clip: usize,
    /// Keep the identity of shifted words; otherwise every word is the
    /// same symbol.
    pub lexical: bool,
}

impl Default for SignatureConfig {
    fn default() -> Self {
        SignatureConfig {
            top_entries: 3,
            open_clip: 5,
            lexical: true,
        }
    }
}

/// One stack entry as seen by the signature.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SigSymbol {
    /// An open nonterminal and, for left-corner states, its projected first
    /// child.
    Open(Arc<str>, Option<Box<SigSymbol>>),
    Closed(Arc<str>),
    Word(Arc<str>),
    /// A word whose identity is not kept.
    Leaf,
    Pad,
}

impl fmt::Display for SigSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SigSymbol::Open(l, None) => write!(f, "+{l}"),
            SigSymbol::Open(l, Some(c)) => write!(f, "+{l}({c})"),
            SigSymbol::Closed(l) => write!(f, "={l}"),
            SigSymbol::Word(w) => write!(f, "'{w}"),
            SigSymbol::Leaf => f.write_str("'"),
            SigSymbol::Pad => f.write_str("#"),
        }
    }
}

/// A finite summary of a parser state: the top stack entries (open label,
/// closed label, or shifted word) and the clipped number of open
/// nonterminals.
///
/// Text form: symbols from the top down separated by spaces, then `|` and
/// the open count, e.g. `+VP 'ran +S|2`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateSignature {
    pub symbols: Vec<SigSymbol>,
    pub open: usize,
}

impl StateSignature {
    pub fn of(state: &ParserState, cfg: &SignatureConfig) -> StateSignature {
        let done = |t: &Tree| match t {
            Tree::Node(n) => SigSymbol::Closed(n.label_arc().clone()),
            Tree::Leaf(w) if cfg.lexical => SigSymbol::Word(w.clone()),
            Tree::Leaf(_) => SigSymbol::Leaf,
        };
        let mut symbols: Vec<SigSymbol> = state
            .entries_from_top()
            .take(cfg.top_entries)
            .map(|e| match e {
                Entry::Open { label, first } => {
                    SigSymbol::Open(label.clone(), first.as_ref().map(|t| Box::new(done(t))))
                }
                Entry::Done(t) => done(t),
            })
            .collect();
        symbols.resize(cfg.top_entries, SigSymbol::Pad);
        StateSignature {
            symbols,
            open: state.open_count().min(cfg.open_clip),
        }
    }

    /// Rewrites every word symbol through `f`.
    pub fn map_words(mut self, mut f: impl FnMut(&Arc<str>) -> Arc<str>) -> StateSignature {
        for s in &mut self.symbols {
            let s = match s {
                SigSymbol::Open(_, Some(c)) => &mut **c,
                other => other,
            };
            if let SigSymbol::Word(w) = s {
                *w = f(w);
            }
        }
        self
    }
}

impl fmt::Display for StateSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.symbols.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, "|{}", self.open)
    }
}

impl FromStr for StateSignature {
    type Err = ScorerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ScorerError::BadSignature(s.to_string());
        let (syms, open) = s.rsplit_once('|').ok_or_else(bad)?;
        if open.is_empty() || !open.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let open = open.parse().map_err(|_| bad())?;
        let symbols = syms
            .split(' ')
            .filter(|t| !t.is_empty())
            .map(|t| parse_symbol(t, true).ok_or_else(bad))
            .collect::<Result<_, _>>()?;
        Ok(StateSignature { symbols, open })
    }
}

fn parse_symbol(t: &str, allow_corner: bool) -> Option<SigSymbol> {
    match t {
        "#" => return Some(SigSymbol::Pad),
        "'" => return Some(SigSymbol::Leaf),
        _ => {}
    }
    let (head, rest) = t.split_at(t.chars().next().map_or(0, char::len_utf8));
    if let (true, "+", Some((label, corner))) = (allow_corner, head, rest.split_once('(')) {
        let corner = parse_symbol(corner.strip_suffix(')')?, false)?;
        if matches!(corner, SigSymbol::Pad | SigSymbol::Open(..)) || !valid_symbol(label) {
            return None;
        }
        return Some(SigSymbol::Open(Arc::from(label), Some(Box::new(corner))));
    }
    if !valid_symbol(rest) {
        return None;
    }
    let rest = Arc::from(rest);
    match head {
        "+" => Some(SigSymbol::Open(rest, None)),
        "=" => Some(SigSymbol::Closed(rest)),
        "'" => Some(SigSymbol::Word(rest)),
        _ => None,
    }
}

impl Serialize for StateSignature {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for StateSignature {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
