use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use beamsurp_core::beam::{BeamConfig, WordMass};
use beamsurp_core::engine::FilterScope;
use beamsurp_core::scorer::{
    ExactFitConfig, ExternalScorer, FitConfig, SignatureConfig, TabularScorer,
};
use beamsurp_core::treebank::parse_weighted_treebank;
use beamsurp_core::{DerivationLimits, Scorer, Strategy, Treebank};
use beamsurp_rt::effect::EmpiricalBand;
use beamsurp_rt::{BootstrapConfig, FitOptions, SynthConfig};
use serde::{Deserialize, Serialize};

pub const DEFAULT_SWEEP: [usize; 12] = [1, 2, 3, 4, 5, 10, 25, 50, 100, 250, 500, 1000];

/// Where next-action and next-word probabilities come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScorerSource {
    /// A table written by `fit-scorer`.
    Tabular { path: PathBuf },
    /// Fit on the fly from a treebank.
    Treebank {
        path: PathBuf,
        #[serde(default)]
        weighted: bool,
        #[serde(default)]
        fit: FitConfig,
        #[serde(default)]
        exact_fit: ExactFitConfig,
    },
    /// A process speaking the line protocol on stdin and stdout. `{seed}` in
    /// an argument is replaced by the run seed.
    External {
        program: String,
        #[serde(default)]
        args: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub strategy: Strategy,
    pub word_beams: Vec<usize>,
    pub action_beam: usize,
    pub reference_word_beam: usize,
    pub limits: Option<DerivationLimits>,
    pub scorer: Option<ScorerSource>,
    pub seeds: Vec<u64>,
    pub sentences: Option<PathBuf>,
    pub specs: Option<PathBuf>,
    pub fillers: Option<PathBuf>,
    pub treebank: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub rng_seed: u64,
    pub word_mass: WordMass,
    pub filter_scope: FilterScope,
    /// Beam widths used when decoding a single best parse.
    pub decode_word_beam: usize,
    pub decode_action_beam: usize,
    pub fit_options: FitOptions,
    pub bootstrap: Option<BootstrapConfig>,
    pub synth: SynthConfig,
    pub bands: Vec<EmpiricalBand>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            strategy: Strategy::TopDown,
            word_beams: DEFAULT_SWEEP.to_vec(),
            action_beam: 1000,
            reference_word_beam: 1000,
            limits: None,
            scorer: None,
            seeds: vec![0],
            sentences: None,
            specs: None,
            fillers: None,
            treebank: None,
            output_dir: PathBuf::from("out"),
            rng_seed: 0,
            word_mass: WordMass::PreTruncation,
            filter_scope: FilterScope::FromVerb,
            decode_word_beam: 200,
            decode_action_beam: 2000,
            fit_options: FitOptions::default(),
            bootstrap: None,
            synth: SynthConfig::default(),
            bands: Vec::new(),
        }
    }
}

impl RunConfig {
    /// Reads a config file. Relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.rebase(base);
        Ok(cfg)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [
            &mut self.sentences,
            &mut self.specs,
            &mut self.fillers,
            &mut self.treebank,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
        fix(&mut self.output_dir);
        match &mut self.scorer {
            Some(ScorerSource::Tabular { path }) | Some(ScorerSource::Treebank { path, .. }) => {
                fix(path)
            }
            _ => {}
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(!self.word_beams.is_empty(), "word_beams must not be empty");
        ensure!(!self.seeds.is_empty(), "seeds must not be empty");
        ensure!(
            self.word_beams.iter().all(|&k| k > 0),
            "word beam widths must be positive"
        );
        self.beam(self.reference_word_beam)?;
        BeamConfig::new(self.decode_word_beam, self.decode_action_beam)?;
        for p in [&self.sentences, &self.specs, &self.fillers, &self.treebank]
            .into_iter()
            .flatten()
        {
            ensure!(p.exists(), "{} does not exist", p.display());
        }
        match &self.scorer {
            Some(ScorerSource::Tabular { path }) | Some(ScorerSource::Treebank { path, .. }) => {
                ensure!(path.exists(), "{} does not exist", path.display())
            }
            _ => {}
        }
        Ok(())
    }

    /// Filler rows: the configured file, else what `synth-fillers` writes.
    pub fn fillers_path(&self) -> PathBuf {
        self.fillers
            .clone()
            .unwrap_or_else(|| self.output_dir.join("fillers.csv"))
    }

    pub fn limits(&self) -> DerivationLimits {
        self.limits.unwrap_or_default()
    }

    pub fn beam(&self, word_beam: usize) -> Result<BeamConfig> {
        let limits = self.limits();
        limits.validate()?;
        Ok(BeamConfig::new(word_beam, self.action_beam)?
            .with_limits(limits)
            .with_word_mass(self.word_mass))
    }

    pub fn bootstrap(&self) -> BootstrapConfig {
        self.bootstrap.unwrap_or(BootstrapConfig {
            seed: self.rng_seed,
            ..BootstrapConfig::default()
        })
    }

    pub fn require<'a>(&self, field: &'a Option<PathBuf>, name: &str) -> Result<&'a Path> {
        match field {
            Some(p) => Ok(p),
            None => bail!("config field `{name}` is required for this command"),
        }
    }

    /// One scorer per seed. Local sources do not depend on the seed.
    pub fn scorer(&self, seed: u64) -> Result<Box<dyn Scorer>> {
        let Some(src) = &self.scorer else {
            bail!("config field `scorer` is required for this command");
        };
        Ok(match src {
            ScorerSource::Tabular { path } => Box::new(load_tabular(path)?),
            ScorerSource::Treebank {
                path,
                weighted,
                fit,
                exact_fit,
            } => Box::new(fit_treebank(
                path,
                self.strategy,
                *weighted,
                fit,
                exact_fit,
            )?),
            ScorerSource::External { program, args } => {
                let args: Vec<String> = args
                    .iter()
                    .map(|a| a.replace("{seed}", &seed.to_string()))
                    .collect();
                Box::new(
                    ExternalScorer::spawn(program, &args)
                        .with_context(|| format!("starting scorer {program}"))?,
                )
            }
        })
    }
}

pub fn load_tabular(path: &Path) -> Result<TabularScorer> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading scorer {}", path.display()))?;
    TabularScorer::from_json(&text).with_context(|| format!("loading scorer {}", path.display()))
}

pub fn fit_treebank(
    path: &Path,
    strategy: Strategy,
    weighted: bool,
    fit: &FitConfig,
    exact_fit: &ExactFitConfig,
) -> Result<TabularScorer> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading treebank {}", path.display()))?;
    let scorer = if weighted {
        let trees = parse_weighted_treebank(&text)
            .with_context(|| format!("parsing {}", path.display()))?;
        TabularScorer::fit_exact(&trees, strategy, exact_fit)?
    } else {
        let tb = Treebank::parse(&text, &path.display().to_string())
            .with_context(|| format!("parsing {}", path.display()))?;
        TabularScorer::fit(&tb, strategy, fit)?
    };
    Ok(scorer)
}

/// Signature settings given on the command line.
pub fn signature(top_entries: usize, open_clip: usize, unlexicalized: bool) -> SignatureConfig {
    SignatureConfig {
        top_entries,
        open_clip,
        lexical: !unlexicalized,
    }
}
