use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use beamsurp_core::beam::surprisal_per_word;
use beamsurp_core::Scorer;
use beamsurp_rt::effect::{band_flag, region_values, Ambiguity, RegionPrediction};
use beamsurp_rt::plot::{render, Panel, Point, Series};
use beamsurp_rt::rows::{read_rows, write_rows, FrequencyTable, RowKey};
use beamsurp_rt::{
    delta_ll, fit_baseline, fit_full, gp_effect_ms, predict_rt, synth_fillers, LinearModel, Region,
    SentenceSurprisals, TokenRow,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::gp::GpWordRow;
use crate::io::{finite, read_csv, read_sentences, write_csv, write_text};
use crate::surprisal::scorers;
use crate::Outcome;

fn sentence_surprisals(
    cfg: &RunConfig,
    scorer: &dyn Scorer,
    k_w: usize,
    sentences: &[(String, Vec<String>)],
) -> Result<Vec<SentenceSurprisals>> {
    let beam = cfg.beam(k_w)?;
    sentences
        .iter()
        .map(|(id, toks)| {
            let run = surprisal_per_word(toks, scorer, cfg.strategy, &beam)
                .with_context(|| format!("sentence {id} at k_w={k_w}"))?;
            Ok(SentenceSurprisals {
                item_id: id.clone(),
                tokens: toks.clone(),
                surprisals: run.surprisals(),
            })
        })
        .collect()
}

/// Generates filler reading times from surprisals at the reference width
/// under the first seed.
pub fn synth(cfg: &RunConfig, out: Option<&Path>) -> Result<Outcome> {
    let sentences = read_sentences(cfg.require(&cfg.sentences, "sentences")?)?;
    let scorer = cfg.scorer(cfg.seeds[0])?;
    let surps = sentence_surprisals(cfg, scorer.as_ref(), cfg.reference_word_beam, &sentences)?;
    let rows = synth_fillers(&cfg.synth, &surps)?;
    let path = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| cfg.output_dir.join("fillers.csv"));
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    write_rows(
        &rows,
        File::create(&path).with_context(|| format!("writing {}", path.display()))?,
    )?;
    println!("{} filler rows written to {}", rows.len(), path.display());
    Ok(Outcome::Done)
}

fn load_rows(path: &Path) -> Result<Vec<TokenRow>> {
    let f = File::open(path).with_context(|| format!("reading {}", path.display()))?;
    read_rows(BufReader::new(f)).with_context(|| format!("parsing {}", path.display()))
}

/// Filler sentences, rebuilt from the rows of their first participant.
fn filler_sentences(rows: &[TokenRow]) -> Result<Vec<(String, Vec<String>)>> {
    let mut by_item: BTreeMap<&str, BTreeMap<usize, &str>> = BTreeMap::new();
    for r in rows {
        let slot = by_item.entry(&r.item_id).or_default();
        if let Some(prev) = slot.insert(r.position, &r.token) {
            ensure!(
                prev == r.token,
                "item {} has two tokens at position {}",
                r.item_id,
                r.position
            );
        }
    }
    by_item
        .into_iter()
        .map(|(id, toks)| {
            ensure!(
                toks.keys().copied().eq(0..toks.len()),
                "item {id} does not cover every position from 0"
            );
            Ok((
                id.to_string(),
                toks.into_values().map(str::to_string).collect(),
            ))
        })
        .collect()
}

/// Widths a filler model is needed for.
fn model_widths(cfg: &RunConfig) -> Vec<usize> {
    let mut ks = cfg.word_beams.clone();
    ks.push(cfg.reference_word_beam);
    ks.sort_unstable();
    ks.dedup();
    ks
}

fn model_path(cfg: &RunConfig, k_w: usize, seed: u64, kind: &str) -> PathBuf {
    cfg.output_dir
        .join("models")
        .join(format!("{}_k{k_w}_s{seed}_{kind}.json", cfg.strategy))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeltaRow {
    pub strategy: String,
    pub seed: u64,
    pub k_w: usize,
    pub n_rows: usize,
    pub delta_ll: Option<f64>,
    pub surprisal_ms_per_bit: Option<f64>,
    pub status: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrendRow {
    pub strategy: String,
    pub seed: u64,
    pub non_decreasing: bool,
}

pub fn fit_rt(cfg: &RunConfig, fillers: Option<&Path>) -> Result<Outcome> {
    let path = fillers.map_or_else(|| cfg.fillers_path(), Path::to_path_buf);
    let rows = load_rows(&path)?;
    let sentences = filler_sentences(&rows)?;
    let scorers = scorers(cfg)?;
    let widths = model_widths(cfg);
    let work: Vec<(u64, &dyn Scorer, usize)> = scorers
        .iter()
        .flat_map(|(seed, s)| widths.iter().map(move |&k| (*seed, s.as_ref(), k)))
        .collect();
    let fits: Vec<Result<(LinearModel, LinearModel, f64), String>> = work
        .par_iter()
        .map(|&(_, scorer, k)| {
            fit_pair(cfg, scorer, k, &sentences, &rows).map_err(|e| format!("{e:#}"))
        })
        .collect();

    let mut table = Vec::new();
    for ((seed, _, k), fit) in work.iter().zip(fits) {
        let row = match fit {
            Ok((base, full, dll)) => {
                for (kind, m) in [("baseline", &base), ("full", &full)] {
                    write_text(
                        &model_path(cfg, *k, *seed, kind),
                        &serde_json::to_string_pretty(m)?,
                    )?;
                }
                DeltaRow {
                    strategy: cfg.strategy.to_string(),
                    seed: *seed,
                    k_w: *k,
                    n_rows: full.n_rows,
                    delta_ll: finite(dll),
                    surprisal_ms_per_bit: full.coefficient("surprisal0").and_then(finite),
                    status: "ok".into(),
                }
            }
            Err(reason) => DeltaRow {
                strategy: cfg.strategy.to_string(),
                seed: *seed,
                k_w: *k,
                n_rows: 0,
                delta_ll: None,
                surprisal_ms_per_bit: None,
                status: reason,
            },
        };
        table.push(row);
    }
    let failures = table.iter().filter(|r| r.status != "ok").count();
    write_csv(&cfg.output_dir.join("delta_ll.csv"), &table)?;

    let mut trends = Vec::new();
    let mut series = Vec::new();
    for (seed, _) in &scorers {
        let points: Vec<&DeltaRow> = table
            .iter()
            .filter(|r| r.seed == *seed && r.delta_ll.is_some())
            .collect();
        let non_decreasing = points
            .windows(2)
            .all(|w| w[1].delta_ll.unwrap() >= w[0].delta_ll.unwrap());
        trends.push(TrendRow {
            strategy: cfg.strategy.to_string(),
            seed: *seed,
            non_decreasing,
        });
        series.push(Series {
            label: format!("{} seed {seed}", cfg.strategy),
            points: points
                .iter()
                .map(|r| Point {
                    k_w: r.k_w,
                    y: r.delta_ll.unwrap(),
                    interval: None,
                })
                .collect(),
        });
    }
    write_csv(&cfg.output_dir.join("delta_ll_trend.csv"), &trends)?;
    let panel = Panel {
        title: "filler fit gain".into(),
        series,
        band: None,
    };
    write_text(
        &cfg.output_dir.join("delta_ll.svg"),
        &render(&[panel], "delta LL"),
    )?;
    Ok(Outcome::from_failures(failures))
}

fn fit_pair(
    cfg: &RunConfig,
    scorer: &dyn Scorer,
    k_w: usize,
    sentences: &[(String, Vec<String>)],
    rows: &[TokenRow],
) -> Result<(LinearModel, LinearModel, f64)> {
    let surps = sentence_surprisals(cfg, scorer, k_w, sentences)?;
    let lookup: BTreeMap<&str, &[f64]> = surps
        .iter()
        .map(|s| (s.item_id.as_str(), s.surprisals.as_slice()))
        .collect();
    let mut rows = rows.to_vec();
    for r in &mut rows {
        r.surprisal = lookup[r.item_id.as_str()][r.position];
    }
    let base = fit_baseline(&rows, &cfg.fit_options)?;
    let full = fit_full(&rows, &cfg.fit_options)?;
    let dll = delta_ll(&full, &base)?;
    Ok((base, full, dll))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EffectRow {
    pub construction: String,
    pub region: String,
    pub condition: String,
    pub k_w: usize,
    pub effect_ms: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub n_items: usize,
    pub n_seeds: usize,
    pub band_flag: String,
}

type SentenceKey = (String, String, usize, u64, String, String);

/// Predicts garden path reading times from the `gp-run` word surprisals and
/// the `fit-rt` models, then estimates effects per construction, region,
/// condition and width.
pub fn predict_gpe(cfg: &RunConfig) -> Result<Outcome> {
    let fillers = load_rows(&cfg.fillers_path())?;
    let freq = FrequencyTable::from_tokens(fillers.iter().map(|r| r.token.as_str()));
    let words: Vec<GpWordRow> = read_csv(&cfg.output_dir.join("gp_words.csv"))
        .context("garden path surprisals missing; run gp-run first")?;
    let specs = crate::gp::load_specs(cfg.require(&cfg.specs, "specs")?)?;
    let disamb: BTreeMap<&str, (usize, usize)> = specs
        .iter()
        .map(|s| {
            (
                s.item_id.as_str(),
                (s.disambiguating_index, s.unambiguous_disambiguating()),
            )
        })
        .collect();

    // (construction, condition, k_w, seed, item, version) -> tokens
    let mut sentences: BTreeMap<SentenceKey, Vec<(String, f64)>> = BTreeMap::new();
    for w in &words {
        let Some(s) = w.surprisal_bits else { continue };
        sentences
            .entry((
                w.construction.clone(),
                w.condition.clone(),
                w.k_w,
                w.seed,
                w.item_id.clone(),
                w.version.clone(),
            ))
            .or_default()
            .push((w.token.clone(), s));
    }
    let mut models: BTreeMap<(usize, u64), LinearModel> = BTreeMap::new();
    let mut grouped: BTreeMap<(String, String, usize, Region), Vec<RegionPrediction>> =
        BTreeMap::new();
    for ((construction, condition, k_w, seed, item, version), toks) in &sentences {
        let model = match models.entry((*k_w, *seed)) {
            Entry::Occupied(e) => e.into_mut(),
            Entry::Vacant(e) => {
                let path = model_path(cfg, *k_w, *seed, "full");
                let text = fs::read_to_string(&path).with_context(|| {
                    format!("no filler model for k_w={k_w} seed {seed}; run fit-rt first")
                })?;
                e.insert(serde_json::from_str(&text)?)
            }
        };
        let Some(&(d_amb, d_una)) = disamb.get(item.as_str()) else {
            bail!("item {item} is not in the spec file");
        };
        let (ambiguity, d) = match version.as_str() {
            "ambiguous" => (Ambiguity::Ambiguous, d_amb),
            "unambiguous" => (Ambiguity::Unambiguous, d_una),
            v => bail!("unknown sentence version {v}"),
        };
        let rows: Vec<TokenRow> = toks
            .iter()
            .enumerate()
            .map(|(i, (tok, s))| TokenRow {
                participant_id: "predicted".into(),
                item_id: item.clone(),
                position: i,
                token: tok.clone(),
                // Not used for prediction.
                rt_ms: 1.0,
                length: beamsurp_rt::rows::token_length(tok),
                logfreq: freq.logfreq(tok),
                surprisal: *s,
                construction: Some(construction.clone()),
                ambiguity: Some(version.clone()),
            })
            .collect();
        let predicted: BTreeMap<usize, f64> = predict_rt(model, &rows)?
            .into_iter()
            .map(|(k, y): (RowKey, f64)| (k.position, y))
            .collect();
        for (region, ms) in region_values(&predicted, d)? {
            grouped
                .entry((construction.clone(), condition.clone(), *k_w, region))
                .or_default()
                .push(RegionPrediction {
                    item_id: item.clone(),
                    seed: *seed,
                    ambiguity,
                    predicted_ms: ms,
                });
        }
    }

    let boot = cfg.bootstrap();
    let mut table = Vec::new();
    let mut failures = 0;
    for ((construction, condition, k_w, region), preds) in &grouped {
        let band = cfg
            .bands
            .iter()
            .find(|b| &b.construction == construction && b.region == *region);
        let row = match gp_effect_ms(construction, *region, preds, &boot) {
            Ok(e) => EffectRow {
                construction: construction.clone(),
                region: region.to_string(),
                condition: condition.clone(),
                k_w: *k_w,
                effect_ms: finite(e.estimate_ms),
                ci_low: finite(e.ci_low),
                ci_high: finite(e.ci_high),
                n_items: e.n_items,
                n_seeds: e.n_seeds,
                band_flag: band
                    .map_or("", |b| band_flag(e.estimate_ms, b).name())
                    .to_string(),
            },
            Err(e) => {
                failures += 1;
                EffectRow {
                    construction: construction.clone(),
                    region: region.to_string(),
                    condition: condition.clone(),
                    k_w: *k_w,
                    effect_ms: None,
                    ci_low: None,
                    ci_high: None,
                    n_items: 0,
                    n_seeds: 0,
                    band_flag: format!("error: {e}"),
                }
            }
        };
        table.push(row);
    }
    write_csv(&cfg.output_dir.join("effects.csv"), &table)?;
    write_text(
        &cfg.output_dir.join("effects.svg"),
        &effect_plot(cfg, &table),
    )?;
    Ok(Outcome::from_failures(failures))
}

/// One panel per construction and region; beam conditions as a line over
/// k_w, counterfactual conditions as flat reference lines.
fn effect_plot(cfg: &RunConfig, table: &[EffectRow]) -> String {
    let mut panels: BTreeMap<(String, String), Vec<&EffectRow>> = BTreeMap::new();
    for r in table.iter().filter(|r| r.effect_ms.is_some()) {
        panels
            .entry((r.construction.clone(), r.region.clone()))
            .or_default()
            .push(r);
    }
    let ks = model_widths(cfg);
    let (kmin, kmax) = (ks[0], *ks.last().unwrap());
    let panels: Vec<Panel> = panels
        .into_iter()
        .map(|((construction, region), rows)| {
            let mut series: BTreeMap<String, Vec<Point>> = BTreeMap::new();
            for r in rows {
                let point = |k| Point {
                    k_w: k,
                    y: r.effect_ms.unwrap(),
                    interval: r.ci_low.zip(r.ci_high),
                };
                if r.condition == "beam" {
                    series
                        .entry(r.condition.clone())
                        .or_default()
                        .push(point(r.k_w));
                } else {
                    let s = series.entry(r.condition.clone()).or_default();
                    s.push(point(kmin));
                    s.push(Point {
                        interval: None,
                        ..point(kmax)
                    });
                }
            }
            let band = cfg
                .bands
                .iter()
                .find(|b| b.construction == construction && b.region.name() == region)
                .map(|b| (b.low_ms, b.high_ms));
            Panel {
                title: format!("{construction} {region}"),
                series: series
                    .into_iter()
                    .map(|(label, points)| Series { label, points })
                    .collect(),
                band,
            }
        })
        .collect();
    render(&panels, "effect (ms)")
}

/// Markdown summary of whatever outputs exist in the output directory.
pub fn report(cfg: &RunConfig) -> Result<Outcome> {
    let dir = &cfg.output_dir;
    let mut md = String::from("# Run report\n\n");
    md.push_str(&format!(
        "Strategy `{}`, word beams {:?}, action beam {}, seeds {:?}.\n\n",
        cfg.strategy, cfg.word_beams, cfg.action_beam, cfg.seeds
    ));

    let gp = dir.join("gp_results.csv");
    if gp.exists() {
        #[derive(Deserialize)]
        struct R {
            construction: String,
            condition: String,
            k_w: usize,
            region: String,
            effect_bits: Option<f64>,
        }
        let rows: Vec<R> = read_csv(&gp)?;
        let mut cells: BTreeMap<(String, String, usize), (f64, usize)> = BTreeMap::new();
        for r in rows.iter().filter(|r| r.region == "disambiguating") {
            if let Some(e) = r.effect_bits {
                let c = cells
                    .entry((r.construction.clone(), r.condition.clone(), r.k_w))
                    .or_default();
                c.0 += e;
                c.1 += 1;
            }
        }
        md.push_str(
            "## Surprisal effects at the disambiguating word (bits, mean over items and seeds)\n\n",
        );
        md.push_str("| construction | condition | k_w | effect |\n|---|---|---|---|\n");
        for ((c, cond, k), (sum, n)) in &cells {
            md.push_str(&format!(
                "| {c} | {cond} | {k} | {:.3} |\n",
                sum / *n as f64
            ));
        }
        md.push('\n');
    }

    let fails = dir.join("failures.csv");
    if fails.exists() {
        let n = fs::read_to_string(&fails)?
            .lines()
            .count()
            .saturating_sub(1);
        md.push_str(&format!(
            "Failed item conditions: {n} (see failures.csv).\n\n"
        ));
    }

    let dll = dir.join("delta_ll.csv");
    if dll.exists() {
        let rows: Vec<DeltaRow> = read_csv(&dll)?;
        md.push_str("## Filler model fit\n\n| seed | k_w | delta LL | ms per bit | status |\n|---|---|---|---|---|\n");
        for r in &rows {
            md.push_str(&format!(
                "| {} | {} | {} | {} | {} |\n",
                r.seed,
                r.k_w,
                fmt_opt(r.delta_ll, 2),
                fmt_opt(r.surprisal_ms_per_bit, 3),
                r.status
            ));
        }
        md.push('\n');
        let trend = dir.join("delta_ll_trend.csv");
        if trend.exists() {
            for t in read_csv::<TrendRow>(&trend)? {
                md.push_str(&format!(
                    "Seed {}: delta LL {} with k_w.\n",
                    t.seed,
                    if t.non_decreasing {
                        "is non-decreasing"
                    } else {
                        "is not monotone"
                    }
                ));
            }
            md.push('\n');
        }
    }

    let eff = dir.join("effects.csv");
    if eff.exists() {
        let rows: Vec<EffectRow> = read_csv(&eff)?;
        md.push_str("## Predicted reading time effects\n\n");
        md.push_str("| construction | region | condition | k_w | effect (ms) | interval | band |\n|---|---|---|---|---|---|---|\n");
        for r in &rows {
            md.push_str(&format!(
                "| {} | {} | {} | {} | {} | [{}, {}] | {} |\n",
                r.construction,
                r.region,
                r.condition,
                r.k_w,
                fmt_opt(r.effect_ms, 2),
                fmt_opt(r.ci_low, 2),
                fmt_opt(r.ci_high, 2),
                r.band_flag
            ));
        }
        md.push('\n');
    }
    write_text(&dir.join("report.md"), &md)?;
    println!("report written to {}", dir.join("report.md").display());
    Ok(Outcome::Done)
}

fn fmt_opt(x: Option<f64>, digits: usize) -> String {
    x.map_or_else(|| "-".into(), |v| format!("{v:.digits$}"))
}
