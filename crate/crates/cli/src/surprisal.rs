use std::path::Path;

use anyhow::{Context, Result};
use beamsurp_core::beam::surprisal_per_word;
use beamsurp_core::engine::{
    exact_interpretation_profile, interpretation_profile, ConstructionSpec,
};
use beamsurp_core::exact::Enumerator;
use beamsurp_core::Scorer;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::io::{finite, read_sentences, write_csv, write_csv_header};
use crate::Outcome;

pub const WORD_HEADER: [&str; 9] = [
    "sentence_id",
    "seed",
    "k_w",
    "position",
    "token",
    "surprisal_bits",
    "beam_items",
    "beam_mass_log",
    "status",
];

#[derive(Debug, Serialize)]
pub struct WordRow {
    pub sentence_id: String,
    pub seed: u64,
    pub k_w: usize,
    pub position: usize,
    pub token: String,
    pub surprisal_bits: Option<f64>,
    pub beam_items: usize,
    pub beam_mass_log: Option<f64>,
    pub status: String,
}

#[derive(Debug, Serialize)]
pub struct SentenceRow {
    pub sentence_id: String,
    pub seed: u64,
    pub k_w: usize,
    pub n_words: usize,
    pub total_bits: Option<f64>,
    pub eos_bits: Option<f64>,
    pub status: String,
}

pub fn scorers(cfg: &RunConfig) -> Result<Vec<(u64, Box<dyn Scorer>)>> {
    cfg.seeds
        .iter()
        .map(|&s| {
            Ok((
                s,
                cfg.scorer(s)
                    .with_context(|| format!("scorer for seed {s}"))?,
            ))
        })
        .collect()
}

/// Word and sentence rows for one sentence at one width.
pub fn score_sentence(
    cfg: &RunConfig,
    scorer: &dyn Scorer,
    seed: u64,
    id: &str,
    sentence: &[String],
    k_w: usize,
) -> Result<(Vec<WordRow>, SentenceRow)> {
    let beam = cfg.beam(k_w)?;
    Ok(
        match surprisal_per_word(sentence, scorer, cfg.strategy, &beam) {
            Ok(run) => {
                let words = run
                    .words
                    .iter()
                    .enumerate()
                    .map(|(i, w)| WordRow {
                        sentence_id: id.to_string(),
                        seed,
                        k_w,
                        position: i,
                        token: w.token.clone(),
                        surprisal_bits: finite(w.surprisal_bits),
                        beam_items: w.n_items,
                        beam_mass_log: finite(w.beam_mass_log),
                        status: "ok".into(),
                    })
                    .collect();
                let total: f64 = run.words.iter().map(|w| w.surprisal_bits).sum();
                let sent = SentenceRow {
                    sentence_id: id.to_string(),
                    seed,
                    k_w,
                    n_words: sentence.len(),
                    total_bits: finite(total),
                    eos_bits: finite(run.eos_surprisal_bits),
                    status: "ok".into(),
                };
                (words, sent)
            }
            Err(e) => {
                let status = e.to_string();
                let words = sentence
                    .iter()
                    .enumerate()
                    .map(|(i, t)| WordRow {
                        sentence_id: id.to_string(),
                        seed,
                        k_w,
                        position: i,
                        token: t.clone(),
                        surprisal_bits: None,
                        beam_items: 0,
                        beam_mass_log: None,
                        status: status.clone(),
                    })
                    .collect();
                let sent = SentenceRow {
                    sentence_id: id.to_string(),
                    seed,
                    k_w,
                    n_words: sentence.len(),
                    total_bits: None,
                    eos_bits: None,
                    status,
                };
                (words, sent)
            }
        },
    )
}

pub fn surprisal(cfg: &RunConfig, sentences: Option<&Path>) -> Result<Outcome> {
    let path = match sentences {
        Some(p) => p,
        None => cfg.require(&cfg.sentences, "sentences")?,
    };
    let sents = read_sentences(path)?;
    let scorers = scorers(cfg)?;
    let mut work = Vec::new();
    for (si, (seed, _)) in scorers.iter().enumerate() {
        for (id, toks) in &sents {
            for &k in &cfg.word_beams {
                work.push((si, *seed, id.as_str(), toks.as_slice(), k));
            }
        }
    }
    let results: Vec<(Vec<WordRow>, SentenceRow)> = work
        .par_iter()
        .map(|&(si, seed, id, toks, k)| {
            score_sentence(cfg, scorers[si].1.as_ref(), seed, id, toks, k)
        })
        .collect::<Result<_>>()?;
    let failures = results.iter().filter(|r| r.1.status != "ok").count();
    let (words, sentences): (Vec<Vec<WordRow>>, Vec<SentenceRow>) = results.into_iter().unzip();
    let words: Vec<WordRow> = words.into_iter().flatten().collect();
    let word_path = cfg.output_dir.join("surprisal.csv");
    if words.is_empty() {
        write_csv_header(&word_path, &WORD_HEADER)?;
    } else {
        write_csv(&word_path, &words)?;
    }
    write_csv(&cfg.output_dir.join("surprisal_sentences.csv"), &sentences)?;
    Ok(Outcome::from_failures(failures))
}

#[derive(Debug, Serialize)]
struct ProfileRow {
    item_id: String,
    construction: String,
    method: &'static str,
    k_w: Option<usize>,
    position: usize,
    initial: f64,
    correct: f64,
    other: f64,
    status: String,
}

pub fn interp_profile(cfg: &RunConfig, specs: &[ConstructionSpec], exact: bool) -> Result<Outcome> {
    let scorer = cfg.scorer(cfg.seeds[0])?;
    let scorer = scorer.as_ref();
    let mut work = Vec::new();
    for spec in specs {
        for &k in &cfg.word_beams {
            work.push((spec, Some(k)));
        }
        if exact {
            work.push((spec, None));
        }
    }
    let blocks: Vec<Vec<ProfileRow>> = work
        .par_iter()
        .map(|&(spec, k)| profile_rows(cfg, scorer, spec, k))
        .collect::<Result<_>>()?;
    let rows: Vec<ProfileRow> = blocks.into_iter().flatten().collect();
    let failures = rows.iter().filter(|r| r.status != "ok").count();
    write_csv(&cfg.output_dir.join("profiles.csv"), &rows)?;
    Ok(Outcome::from_failures(failures))
}

fn profile_rows(
    cfg: &RunConfig,
    scorer: &dyn Scorer,
    spec: &ConstructionSpec,
    k: Option<usize>,
) -> Result<Vec<ProfileRow>> {
    let base = |method, position, status: String| ProfileRow {
        item_id: spec.item_id.clone(),
        construction: spec.construction.to_string(),
        method,
        k_w: k,
        position,
        initial: 0.0,
        correct: 0.0,
        other: 0.0,
        status,
    };
    let sent = &spec.ambiguous_sentence;
    let profiles = match k {
        Some(k) => surprisal_per_word(sent, scorer, cfg.strategy, &cfg.beam(k)?)
            .map_err(anyhow::Error::from)
            .and_then(|run| Ok(interpretation_profile(&run.snapshots, spec)?)),
        None => {
            let e = Enumerator::new(scorer, cfg.strategy, cfg.limits());
            (spec.ambiguous_verb_index + 1..=sent.len())
                .map(|i| Ok(exact_interpretation_profile(&sent[..i], spec, &e)?))
                .collect()
        }
    };
    let method = if k.is_some() { "beam" } else { "exact" };
    Ok(match profiles {
        Ok(ps) => ps
            .into_iter()
            .map(|p| ProfileRow {
                initial: p.initial,
                correct: p.correct,
                other: p.other,
                ..base(method, p.position, "ok".into())
            })
            .collect(),
        Err(e) => vec![base(method, spec.ambiguous_verb_index + 1, e.to_string())],
    })
}
