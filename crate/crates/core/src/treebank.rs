//! Labeled constituency trees, the bracketed text format, and labeled-bracket
//! evaluation.
//!
//! The bracketed format is Penn-style without preterminal requirements:
//! `(S (NP the girl) (VP slept))`. Labels and tokens are whitespace-delimited
//! runs of characters other than `(` and `)`; there is no escape mechanism.
//! A treebank file holds one tree per line.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

/// Errors raised while reading or comparing trees.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("empty input")]
    Empty,
    #[error("unbalanced brackets: unexpected `)` at byte {0}")]
    UnexpectedClose(usize),
    #[error("unbalanced brackets: {0} constituent(s) left open")]
    Unclosed(usize),
    #[error("constituent `{label}` at byte {offset} has no children")]
    EmptyConstituent { label: String, offset: usize },
    #[error("missing label after `(` at byte {0}")]
    MissingLabel(usize),
    #[error("token outside any constituent at byte {0}")]
    StrayToken(usize),
    #[error("trailing input after the tree at byte {0}")]
    TrailingInput(usize),
    #[error(
        "invalid symbol {0:?}: symbols must be nonempty and free of whitespace and parentheses"
    )]
    InvalidSymbol(String),
    #[error("the root of a tree must be a constituent, not a bare token")]
    LeafRoot,
    #[error("yield mismatch between gold and predicted trees")]
    YieldMismatch,
    #[error("line {line}: {source}")]
    AtLine {
        line: usize,
        #[source]
        source: Box<TreeError>,
    },
    #[error("line {0}: expected `<weight> <tree>` with a finite positive weight")]
    BadWeight(usize),
    #[error("treebank is empty")]
    EmptyTreebank,
}

/// Checks that `s` is usable as a label or token in the bracketed format.
pub fn valid_symbol(s: &str) -> bool {
    !s.is_empty() && !s.chars().any(|c| c.is_whitespace() || c == '(' || c == ')')
}

fn checked_symbol(s: &str) -> Result<Arc<str>, TreeError> {
    if valid_symbol(s) {
        Ok(Arc::from(s))
    } else {
        Err(TreeError::InvalidSymbol(s.to_string()))
    }
}

/// An internal constituent: a label over a nonempty ordered list of children.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Node {
    label: Arc<str>,
    children: Vec<Tree>,
}

impl Node {
    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn label_arc(&self) -> &Arc<str> {
        &self.label
    }

    pub fn children(&self) -> &[Tree] {
        &self.children
    }
}

/// A constituency tree. Cloning is cheap: internal nodes are shared.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Tree {
    Leaf(Arc<str>),
    Node(Arc<Node>),
}

impl Tree {
    pub fn leaf(token: &str) -> Result<Tree, TreeError> {
        Ok(Tree::Leaf(checked_symbol(token)?))
    }

    pub fn node(label: &str, children: Vec<Tree>) -> Result<Tree, TreeError> {
        let label = checked_symbol(label)?;
        Tree::from_parts(label, children)
    }

    /// Builds a node from an already validated label.
    pub(crate) fn from_parts(label: Arc<str>, children: Vec<Tree>) -> Result<Tree, TreeError> {
        if children.is_empty() {
            return Err(TreeError::EmptyConstituent {
                label: label.to_string(),
                offset: 0,
            });
        }
        Ok(Tree::Node(Arc::new(Node { label, children })))
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, Tree::Leaf(_))
    }

    /// The label of an internal node, or the token of a leaf.
    pub fn symbol(&self) -> &str {
        match self {
            Tree::Leaf(w) => w,
            Tree::Node(n) => &n.label,
        }
    }

    pub fn children(&self) -> &[Tree] {
        match self {
            Tree::Leaf(_) => &[],
            Tree::Node(n) => &n.children,
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            Tree::Leaf(_) => 1,
            Tree::Node(n) => n.children.iter().map(Tree::leaf_count).sum(),
        }
    }

    /// Left-to-right leaf tokens.
    pub fn yield_words(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(self.leaf_count());
        self.visit_leaves(&mut |w| out.push(w.to_string()));
        out
    }

    fn visit_leaves(&self, f: &mut impl FnMut(&str)) {
        match self {
            Tree::Leaf(w) => f(w),
            Tree::Node(n) => n.children.iter().for_each(|c| c.visit_leaves(f)),
        }
    }

    /// Every internal node as a labeled span over the yield. Unary nodes over
    /// a single leaf count as width-one brackets; the root is included.
    pub fn brackets(&self) -> BracketSet {
        fn walk(t: &Tree, start: usize, out: &mut Vec<Bracket>) -> usize {
            match t {
                Tree::Leaf(_) => start + 1,
                Tree::Node(n) => {
                    let mut end = start;
                    for c in &n.children {
                        end = walk(c, end, out);
                    }
                    out.push(Bracket {
                        label: n.label.to_string(),
                        start,
                        end,
                    });
                    end
                }
            }
        }
        let mut out = Vec::new();
        walk(self, 0, &mut out);
        out.sort();
        BracketSet(out)
    }

    pub fn depth(&self) -> usize {
        match self {
            Tree::Leaf(_) => 0,
            Tree::Node(n) => 1 + n.children.iter().map(Tree::depth).max().unwrap_or(0),
        }
    }

    /// Canonical bracketed rendering with single spaces.
    pub fn render_bracketed(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Iterative so that pathological depths cannot overflow the stack.
        enum Step<'a> {
            Open(&'a Tree),
            Close,
        }
        let mut todo = vec![Step::Open(self)];
        let mut first = true;
        while let Some(step) = todo.pop() {
            match step {
                Step::Open(Tree::Leaf(w)) => {
                    if !first {
                        f.write_str(" ")?;
                    }
                    f.write_str(w)?;
                }
                Step::Open(Tree::Node(n)) => {
                    if !first {
                        f.write_str(" ")?;
                    }
                    write!(f, "({}", n.label)?;
                    todo.push(Step::Close);
                    for c in n.children.iter().rev() {
                        todo.push(Step::Open(c));
                    }
                }
                Step::Close => f.write_str(")")?,
            }
            first = false;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Lexeme<'a> {
    Open,
    Close,
    Atom(&'a str),
}

fn lex(text: &str) -> impl Iterator<Item = (usize, Lexeme<'_>)> + '_ {
    let mut rest = text.char_indices().peekable();
    std::iter::from_fn(move || loop {
        let (i, c) = rest.next()?;
        match c {
            '(' => return Some((i, Lexeme::Open)),
            ')' => return Some((i, Lexeme::Close)),
            c if c.is_whitespace() => continue,
            _ => {
                let mut end = i + c.len_utf8();
                while let Some(&(j, d)) = rest.peek() {
                    if d.is_whitespace() || d == '(' || d == ')' {
                        break;
                    }
                    end = j + d.len_utf8();
                    rest.next();
                }
                return Some((i, Lexeme::Atom(&text[i..end])));
            }
        }
    })
}

/// Parses a single bracketed tree.
pub fn parse_bracketed(text: &str) -> Result<Tree, TreeError> {
    let mut stack: Vec<(Arc<str>, usize, Vec<Tree>)> = Vec::new();
    let mut done: Option<Tree> = None;
    let mut lexemes = lex(text).peekable();
    while let Some((offset, lx)) = lexemes.next() {
        if done.is_some() {
            return Err(TreeError::TrailingInput(offset));
        }
        match lx {
            Lexeme::Open => match lexemes.next() {
                Some((_, Lexeme::Atom(label))) => {
                    stack.push((Arc::from(label), offset, Vec::new()))
                }
                _ => return Err(TreeError::MissingLabel(offset)),
            },
            Lexeme::Close => {
                let (label, start, children) =
                    stack.pop().ok_or(TreeError::UnexpectedClose(offset))?;
                if children.is_empty() {
                    return Err(TreeError::EmptyConstituent {
                        label: label.to_string(),
                        offset: start,
                    });
                }
                let node = Tree::Node(Arc::new(Node { label, children }));
                match stack.last_mut() {
                    Some((_, _, siblings)) => siblings.push(node),
                    None => done = Some(node),
                }
            }
            Lexeme::Atom(token) => match stack.last_mut() {
                Some((_, _, children)) => children.push(Tree::Leaf(Arc::from(token))),
                None => return Err(TreeError::StrayToken(offset)),
            },
        }
    }
    if !stack.is_empty() {
        return Err(TreeError::Unclosed(stack.len()));
    }
    done.ok_or(TreeError::Empty)
}

/// A labeled span `[start, end)` over a tree's yield.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Bracket {
    pub label: String,
    pub start: usize,
    pub end: usize,
}

/// Sorted multiset of brackets.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BracketSet(Vec<Bracket>);

impl BracketSet {
    pub fn iter(&self) -> impl Iterator<Item = &Bracket> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn counts(&self) -> BTreeMap<&Bracket, usize> {
        let mut m = BTreeMap::new();
        for b in &self.0 {
            *m.entry(b).or_insert(0) += 1;
        }
        m
    }

    /// Size of the multiset intersection.
    pub fn matching(&self, other: &BracketSet) -> usize {
        let theirs = other.counts();
        self.counts()
            .into_iter()
            .map(|(b, n)| n.min(theirs.get(b).copied().unwrap_or(0)))
            .sum()
    }
}

impl FromIterator<Bracket> for BracketSet {
    fn from_iter<I: IntoIterator<Item = Bracket>>(iter: I) -> Self {
        let mut v: Vec<_> = iter.into_iter().collect();
        v.sort();
        BracketSet(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    pub fn from_counts(matched: usize, predicted: usize, gold: usize) -> Prf {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(matched, predicted);
        let recall = ratio(matched, gold);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Prf {
            precision,
            recall,
            f1,
        }
    }
}

/// Labeled bracket precision, recall and F1 of `pred` against `gold`.
pub fn labeled_f1(gold: &Tree, pred: &Tree) -> Result<Prf, TreeError> {
    if gold.yield_words() != pred.yield_words() {
        return Err(TreeError::YieldMismatch);
    }
    let (g, p) = (gold.brackets(), pred.brackets());
    Ok(Prf::from_counts(p.matching(&g), p.len(), g.len()))
}

/// One row of an F1 report.
#[derive(Debug, Clone, Serialize)]
pub struct F1Row {
    pub sentence_id: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Treebank {
    pub trees: Vec<Tree>,
    pub source: String,
}

impl Treebank {
    /// Reads one tree per nonblank line; errors carry 1-based line numbers.
    pub fn parse(text: &str, source: &str) -> Result<Treebank, TreeError> {
        let trees = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                parse_bracketed(l).map_err(|e| TreeError::AtLine {
                    line: i + 1,
                    source: Box::new(e),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Treebank {
            trees,
            source: source.to_string(),
        })
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for t in &self.trees {
            s.push_str(&t.render_bracketed());
            s.push('\n');
        }
        s
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    pub fn len(&self) -> usize {
        self.trees.len()
    }
}

/// A tree with a positive weight, used to specify exact fixture grammars.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedTree {
    pub weight: f64,
    pub tree: Tree,
}

/// Reads `<weight> <tree>` lines. Blank lines and lines starting with `#` are
/// skipped.
pub fn parse_weighted_treebank(text: &str) -> Result<Vec<WeightedTree>, TreeError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (w, rest) = line
            .split_once(char::is_whitespace)
            .ok_or(TreeError::BadWeight(i + 1))?;
        let weight: f64 = w.parse().map_err(|_| TreeError::BadWeight(i + 1))?;
        if !(weight.is_finite() && weight > 0.0) {
            return Err(TreeError::BadWeight(i + 1));
        }
        let tree = parse_bracketed(rest).map_err(|e| TreeError::AtLine {
            line: i + 1,
            source: Box::new(e),
        })?;
        out.push(WeightedTree { weight, tree });
    }
    if out.is_empty() {
        return Err(TreeError::EmptyTreebank);
    }
    Ok(out)
}
