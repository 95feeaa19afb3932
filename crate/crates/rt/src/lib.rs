//! Linking surprisal to reading times: least-squares filler models,
//! likelihood gains over a baseline, predicted garden path effects with
//! bootstrap intervals, synthetic filler generation and simple SVG plots.
//!
//! Random effects are not modeled. Reading times can instead be centered by
//! participant and item before fitting, and effect intervals come from
//! resampling items.

pub mod effect;
pub mod model;
pub mod plot;
pub mod rows;
pub mod synth;

use thiserror::Error;

pub use effect::{gp_effect_ms, BootstrapConfig, EffectEstimate, Region};
pub use model::{delta_ll, fit_baseline, fit_full, predict_rt, FitOptions, LinearModel, ModelKind};
pub use rows::TokenRow;
pub use synth::{synth_fillers, SentenceSurprisals, SynthConfig};

#[derive(Debug, Error)]
pub enum RtError {
    #[error("row {item}@{position}: {reason}")]
    InvalidRow {
        item: String,
        position: usize,
        reason: String,
    },
    #[error("csv line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error("duplicate row for participant {participant}, item {item}, position {position}")]
    DuplicateRow {
        participant: String,
        item: String,
        position: usize,
    },
    #[error("{rows} usable rows, at least {needed} needed")]
    InsufficientRows { rows: usize, needed: usize },
    #[error("predictors are collinear: {}", predictors.join(", "))]
    RankDeficient { predictors: Vec<String> },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("expected {expected} predictor values, found {found}")]
    PredictorCount { expected: usize, found: usize },
    #[error("models were fit on different rows")]
    RowMismatch,
    #[error("unpaired prediction: {0}")]
    Unpaired(String),
    #[error("no predictions to estimate an effect from")]
    EmptyEffect,
    #[error("no value at position {0}")]
    MissingPosition(usize),
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
