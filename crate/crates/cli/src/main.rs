//! `beamsurp`: batch runs of the beam search surprisal experiments.
//!
//! Exit codes: 0 on success, 1 on configuration or input errors, 2 when the
//! run finished but some items or conditions failed (see the failure rows in
//! the outputs).

mod config;
mod gp;
mod io;
mod linking;
mod parsing;
mod surprisal;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use beamsurp_core::Strategy;
use clap::{Args, Parser, Subcommand};

use config::RunConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Done,
    /// Finished with this many failed work items.
    Partial(usize),
}

impl Outcome {
    pub fn from_failures(n: usize) -> Outcome {
        if n == 0 {
            Outcome::Done
        } else {
            Outcome::Partial(n)
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "beamsurp",
    version,
    about = "Beam search surprisal and garden path experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Config file and the overrides shared by run commands.
#[derive(Debug, Args)]
struct RunArgs {
    /// JSON run configuration. Defaults apply when omitted.
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[arg(long)]
    strategy: Option<Strategy>,
    /// Comma-separated word beam widths.
    #[arg(long, value_delimiter = ',')]
    word_beams: Option<Vec<usize>>,
    #[arg(long)]
    action_beam: Option<usize>,
    /// Comma-separated scorer seeds.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    rng_seed: Option<u64>,
}

impl RunArgs {
    fn load(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(s) = self.strategy {
            cfg.strategy = s;
        }
        if let Some(k) = &self.word_beams {
            cfg.word_beams = k.clone();
        }
        if let Some(k) = self.action_beam {
            cfg.action_beam = k;
        }
        if let Some(s) = &self.seeds {
            cfg.seeds = s.clone();
        }
        if let Some(d) = &self.output_dir {
            cfg.output_dir = d.clone();
        }
        if let Some(s) = self.rng_seed {
            cfg.rng_seed = s;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the oracle derivation of every tree, one action per line and a
    /// blank line after each tree.
    OracleExtract {
        treebank: PathBuf,
        #[arg(long, default_value = "top-down")]
        strategy: Strategy,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit a count-based scorer from a treebank and write it as JSON.
    FitScorer(parsing::FitScorerArgs),
    /// Decode the best parse of every gold sentence and report labeled F1.
    ParseEval {
        #[command(flatten)]
        run: RunArgs,
        /// Gold treebank; defaults to the config's `treebank`.
        #[arg(long)]
        gold: Option<PathBuf>,
    },
    /// Per-word surprisal for every sentence, width and seed.
    Surprisal {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        sentences: Option<PathBuf>,
    },
    /// Garden path effects across the width sweep and the counterfactual
    /// conditions.
    GpRun {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        specs: Option<PathBuf>,
    },
    /// Probability mass of each interpretation in the beam after the
    /// ambiguous verb.
    InterpProfile {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        specs: Option<PathBuf>,
        /// Add profiles from exhaustive enumeration (small grammars only).
        #[arg(long)]
        exact: bool,
    },
    /// Generate synthetic filler reading times from computed surprisals.
    SynthFillers {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit baseline and surprisal reading time models on filler rows for
    /// every width and seed.
    FitRt {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        fillers: Option<PathBuf>,
    },
    /// Predict garden path reading time effects from the fitted models.
    PredictGpe {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Summarize the outputs in the output directory as markdown.
    Report {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Answer scorer queries on stdin and stdout from a fitted table.
    ServeScorer { scorer: PathBuf },
}

fn run(cmd: Command) -> Result<Outcome> {
    match cmd {
        Command::OracleExtract {
            treebank,
            strategy,
            out,
        } => parsing::oracle_extract(&treebank, strategy, out.as_deref()),
        Command::FitScorer(a) => parsing::fit_scorer(&a),
        Command::ParseEval { run, gold } => parsing::parse_eval(&run.load()?, gold.as_deref()),
        Command::Surprisal { run, sentences } => {
            surprisal::surprisal(&run.load()?, sentences.as_deref())
        }
        Command::GpRun { run, specs } => {
            let cfg = run.load()?;
            let specs = gp::load_specs(match &specs {
                Some(p) => p,
                None => cfg.require(&cfg.specs, "specs")?,
            })?;
            gp::gp_run(&cfg, &specs)
        }
        Command::InterpProfile { run, specs, exact } => {
            let cfg = run.load()?;
            let specs = gp::load_specs(match &specs {
                Some(p) => p,
                None => cfg.require(&cfg.specs, "specs")?,
            })?;
            surprisal::interp_profile(&cfg, &specs, exact)
        }
        Command::SynthFillers { run, out } => linking::synth(&run.load()?, out.as_deref()),
        Command::FitRt { run, fillers } => linking::fit_rt(&run.load()?, fillers.as_deref()),
        Command::PredictGpe { run } => linking::predict_gpe(&run.load()?),
        Command::Report { run } => linking::report(&run.load()?),
        Command::ServeScorer { scorer } => parsing::serve_scorer(&scorer),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Partial(n)) => {
            eprintln!("finished with {n} failed work items");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
