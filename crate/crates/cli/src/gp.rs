use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use beamsurp_core::engine::{
    parse_construction_specs, run_garden_path, Condition, ConditionResult, ConstructionSpec,
    GpSettings,
};
use beamsurp_core::BeamConfig;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::io::{finite, write_csv, write_csv_header};
use crate::surprisal::scorers;
use crate::Outcome;

pub fn load_specs(path: &Path) -> Result<Vec<ConstructionSpec>> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading specs {}", path.display()))?;
    parse_construction_specs(&text).with_context(|| format!("parsing specs {}", path.display()))
}

#[derive(Debug, Serialize)]
struct ResultRow<'a> {
    item_id: &'a str,
    construction: String,
    seed: u64,
    condition: &'static str,
    k_w: usize,
    region: &'a str,
    surprisal_ambig: Option<f64>,
    surprisal_unambig: Option<f64>,
    effect_bits: Option<f64>,
}

/// Per-word surprisal of one sentence version under one condition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GpWordRow {
    pub item_id: String,
    pub construction: String,
    pub seed: u64,
    pub condition: String,
    pub k_w: usize,
    pub version: String,
    pub position: usize,
    pub token: String,
    pub surprisal_bits: Option<f64>,
}

pub const WORD_HEADER: [&str; 9] = [
    "item_id",
    "construction",
    "seed",
    "condition",
    "k_w",
    "version",
    "position",
    "token",
    "surprisal_bits",
];

#[derive(Debug, Serialize)]
struct FailureRow {
    item_id: String,
    seed: u64,
    condition: &'static str,
    k_w: usize,
    reason: String,
}

fn condition_k(c: Condition, reference: usize) -> usize {
    match c {
        Condition::Beam(k) => k,
        _ => reference,
    }
}

pub fn gp_run(cfg: &RunConfig, specs: &[ConstructionSpec]) -> Result<Outcome> {
    let scorers = scorers(cfg)?;
    let settings = GpSettings {
        word_beams: cfg.word_beams.clone(),
        reference_word_beam: cfg.reference_word_beam,
        base: BeamConfig {
            word_beam: cfg.reference_word_beam,
            ..cfg.beam(cfg.reference_word_beam)?
        },
        scope: cfg.filter_scope,
    };
    let work: Vec<(u64, &dyn beamsurp_core::Scorer, &ConstructionSpec)> = scorers
        .iter()
        .flat_map(|(seed, s)| specs.iter().map(move |spec| (*seed, s.as_ref(), spec)))
        .collect();
    let outcomes: Vec<_> = work
        .par_iter()
        .map(|&(seed, scorer, spec)| {
            (
                seed,
                spec,
                run_garden_path(spec, scorer, cfg.strategy, &settings),
            )
        })
        .collect();

    let mut results = Vec::new();
    let mut words = Vec::new();
    let mut failures = Vec::new();
    for (seed, spec, outcome) in &outcomes {
        let r = match outcome {
            Ok(r) => r,
            Err(e) => {
                failures.push(FailureRow {
                    item_id: spec.item_id.clone(),
                    seed: *seed,
                    condition: "all",
                    k_w: 0,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        let mut conditions: Vec<&ConditionResult> = r.conditions.iter().collect();
        conditions.sort_by_key(|c| c.condition);
        for c in conditions {
            for (region, a, u) in &c.effect.components {
                results.push(ResultRow {
                    item_id: &spec.item_id,
                    construction: spec.construction.to_string(),
                    seed: *seed,
                    condition: c.condition.name(),
                    k_w: c.k_w,
                    region,
                    surprisal_ambig: finite(*a),
                    surprisal_unambig: finite(*u),
                    effect_bits: finite(a - u),
                });
            }
            results.push(ResultRow {
                item_id: &spec.item_id,
                construction: spec.construction.to_string(),
                seed: *seed,
                condition: c.condition.name(),
                k_w: c.k_w,
                region: "summed",
                surprisal_ambig: None,
                surprisal_unambig: None,
                effect_bits: finite(c.effect.summed),
            });
            for (version, sent, values) in [
                ("ambiguous", &spec.ambiguous_sentence, &c.ambiguous),
                ("unambiguous", &spec.unambiguous_sentence, &c.unambiguous),
            ] {
                for (i, (tok, s)) in sent.iter().zip(values).enumerate() {
                    words.push(GpWordRow {
                        item_id: spec.item_id.clone(),
                        construction: spec.construction.to_string(),
                        seed: *seed,
                        condition: c.condition.name().to_string(),
                        k_w: c.k_w,
                        version: version.to_string(),
                        position: i,
                        token: tok.clone(),
                        surprisal_bits: finite(*s),
                    });
                }
            }
        }
        let mut fails: Vec<_> = r.failures.iter().collect();
        fails.sort_by_key(|f| f.0);
        for (c, reason) in fails {
            if *c == Condition::FullParallel && spec.fullparallel_substitute.is_none() {
                eprintln!(
                    "warning: {} has no full parallel substitute; condition skipped",
                    spec.item_id
                );
            }
            failures.push(FailureRow {
                item_id: spec.item_id.clone(),
                seed: *seed,
                condition: c.name(),
                k_w: condition_k(*c, cfg.reference_word_beam),
                reason: reason.clone(),
            });
        }
    }

    let dir = &cfg.output_dir;
    write_csv(&dir.join("gp_results.csv"), &results)?;
    if words.is_empty() {
        write_csv_header(&dir.join("gp_words.csv"), &WORD_HEADER)?;
    } else {
        write_csv(&dir.join("gp_words.csv"), &words)?;
    }
    if failures.is_empty() {
        write_csv_header(
            &dir.join("failures.csv"),
            &["item_id", "seed", "condition", "k_w", "reason"],
        )?;
    } else {
        write_csv(&dir.join("failures.csv"), &failures)?;
    }
    Ok(Outcome::from_failures(failures.len()))
}
