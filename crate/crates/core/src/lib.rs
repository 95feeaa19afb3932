//! Incremental generative constituency parsing with word-synchronous beam
//! search, beam-marginal next-word surprisal, exact enumeration for small
//! grammars, and the garden path experiment layer built on top of them.

pub mod beam;
pub mod engine;
pub mod exact;
pub mod fixtures;
pub mod logspace;
pub mod scorer;
pub mod transition;
pub mod treebank;

pub use beam::{BeamConfig, BeamError, BeamItem, WordBeam};
pub use scorer::{Scorer, ScorerError};
pub use transition::{Action, ActionKind, DerivationLimits, ParserState, Strategy};
pub use treebank::{Tree, Treebank};
