use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use beamsurp_core::beam::best_parse;
use beamsurp_core::scorer::{serve, ExactFitConfig, FitConfig};
use beamsurp_core::transition::{oracle, render_actions, replay_tree};
use beamsurp_core::treebank::labeled_f1;
use beamsurp_core::{Strategy, Treebank};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{fit_treebank, load_tabular, signature, RunConfig};
use crate::io::{write_csv, write_text};
use crate::Outcome;

pub fn oracle_extract(treebank: &Path, strategy: Strategy, out: Option<&Path>) -> Result<Outcome> {
    let text =
        fs::read_to_string(treebank).with_context(|| format!("reading {}", treebank.display()))?;
    let tb = Treebank::parse(&text, &treebank.display().to_string())
        .with_context(|| format!("parsing {}", treebank.display()))?;
    if tb.is_empty() {
        bail!("{} holds no trees", treebank.display());
    }
    let mut lines = String::new();
    for (i, tree) in tb.trees.iter().enumerate() {
        let acts = oracle(tree, strategy);
        if replay_tree(&acts, strategy).ok().as_ref() != Some(tree) {
            bail!("tree {} does not survive an oracle round trip", i + 1);
        }
        lines.push_str(&render_actions(&acts));
        lines.push('\n');
    }
    match out {
        Some(p) => write_text(p, &lines)?,
        None => std::io::stdout().write_all(lines.as_bytes())?,
    }
    Ok(Outcome::Done)
}

#[derive(Debug, clap::Args)]
pub struct FitScorerArgs {
    #[arg(long)]
    pub treebank: PathBuf,
    #[arg(long, default_value = "top-down")]
    pub strategy: Strategy,
    #[arg(long)]
    pub out: PathBuf,
    /// Read `<weight> <tree>` lines and fit exact relative frequencies.
    #[arg(long)]
    pub weighted: bool,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub min_word_count: Option<usize>,
    #[arg(long)]
    pub top_entries: Option<usize>,
    #[arg(long)]
    pub open_clip: Option<usize>,
    /// Drop word identities from state signatures.
    #[arg(long)]
    pub unlexicalized: bool,
    /// Additive smoothing of word distributions in weighted fits.
    #[arg(long)]
    pub word_smoothing: Option<f64>,
}

pub fn fit_scorer(a: &FitScorerArgs) -> Result<Outcome> {
    let mut fit = FitConfig::default();
    let mut exact = ExactFitConfig::default();
    let base = if a.weighted {
        exact.signature
    } else {
        fit.signature
    };
    let sig = signature(
        a.top_entries.unwrap_or(base.top_entries),
        a.open_clip.unwrap_or(base.open_clip),
        a.unlexicalized,
    );
    fit.signature = sig;
    exact.signature = sig;
    if let Some(x) = a.alpha {
        fit.alpha = x;
    }
    if let Some(x) = a.min_word_count {
        fit.min_word_count = x;
    }
    if let Some(x) = a.word_smoothing {
        exact.word_smoothing = x;
    }
    let scorer = fit_treebank(&a.treebank, a.strategy, a.weighted, &fit, &exact)?;
    write_text(&a.out, &scorer.to_json())?;
    Ok(Outcome::Done)
}

#[derive(Debug, Serialize)]
struct F1Row {
    sentence_id: usize,
    precision: f64,
    recall: f64,
    f1: f64,
    status: String,
}

#[derive(Debug, Serialize)]
struct F1Summary {
    sentences: usize,
    failures: usize,
    matched: usize,
    predicted: usize,
    gold: usize,
    precision: f64,
    recall: f64,
    f1: f64,
}

pub fn parse_eval(cfg: &RunConfig, gold: Option<&Path>) -> Result<Outcome> {
    let gold = match gold {
        Some(p) => p,
        None => cfg.require(&cfg.treebank, "treebank")?,
    };
    let text = fs::read_to_string(gold).with_context(|| format!("reading {}", gold.display()))?;
    let tb = Treebank::parse(&text, &gold.display().to_string())?;
    let scorer = cfg.scorer(cfg.seeds[0])?;
    let beam = beamsurp_core::BeamConfig::new(cfg.decode_word_beam, cfg.decode_action_beam)?
        .with_limits(cfg.limits());
    let results: Vec<(F1Row, [usize; 3])> = tb
        .trees
        .par_iter()
        .enumerate()
        .map(
            |(i, g)| match best_parse(&g.yield_words(), scorer.as_ref(), cfg.strategy, &beam) {
                Ok((tree, _)) => {
                    let prf = labeled_f1(g, &tree).expect("decoded tree shares the gold yield");
                    let (gb, pb) = (g.brackets(), tree.brackets());
                    (
                        F1Row {
                            sentence_id: i + 1,
                            precision: prf.precision,
                            recall: prf.recall,
                            f1: prf.f1,
                            status: "ok".into(),
                        },
                        [pb.matching(&gb), pb.len(), gb.len()],
                    )
                }
                Err(e) => (
                    F1Row {
                        sentence_id: i + 1,
                        precision: 0.0,
                        recall: 0.0,
                        f1: 0.0,
                        status: e.to_string(),
                    },
                    [0, 0, g.brackets().len()],
                ),
            },
        )
        .collect();
    let failures = results.iter().filter(|r| r.0.status != "ok").count();
    let [m, p, g] = results.iter().fold([0; 3], |acc, r| {
        [acc[0] + r.1[0], acc[1] + r.1[1], acc[2] + r.1[2]]
    });
    let prf = beamsurp_core::treebank::Prf::from_counts(m, p, g);
    let rows: Vec<F1Row> = results.into_iter().map(|r| r.0).collect();
    write_csv(&cfg.output_dir.join("f1.csv"), &rows)?;
    let summary = F1Summary {
        sentences: rows.len(),
        failures,
        matched: m,
        predicted: p,
        gold: g,
        precision: prf.precision,
        recall: prf.recall,
        f1: prf.f1,
    };
    write_csv(&cfg.output_dir.join("f1_summary.csv"), &[&summary])?;
    println!(
        "labeled F1 {:.4} over {} sentences ({} failed)",
        prf.f1,
        rows.len(),
        failures
    );
    Ok(if failures > 0 {
        Outcome::Partial(failures)
    } else {
        Outcome::Done
    })
}

pub fn serve_scorer(path: &Path) -> Result<Outcome> {
    let scorer = load_tabular(path)?;
    let stdin = std::io::stdin();
    serve(
        &scorer,
        BufReader::new(stdin.lock()),
        std::io::stdout().lock(),
    )?;
    Ok(Outcome::Done)
}
