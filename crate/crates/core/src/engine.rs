//! Garden path experiments: interpretation bins, per-word interpretation
//! profiles, and the two counterfactual beam conditions.
//!
//! An interpretation is identified structurally, by the labels on the path
//! from the ambiguous verb to the root of its partial structure. Open
//! nonterminals count as ancestors.
//!
//! * **Forced garden path**: the beam is restricted to parses in the
//!   initially preferred bin before each word's probability is computed.
//! * **Full parallel**: the beam is augmented with parses of a minimally
//!   different unambiguous sentence whose verb is substituted back and
//!   rescored, so a globally correct parse is always available.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::beam::{
    advance_word, prune, surprisal_per_word, BeamConfig, BeamError, BeamItem, WordBeam,
};
use crate::exact::{Enumerator, ExactError};
use crate::logspace::{log_sum_exp, nats_to_bits};
use crate::scorer::{sequence_logprob, Scorer, ScorerError};
use crate::transition::{Action, ParserState, Strategy};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid construction spec {item}: {reason}")]
    Spec { item: String, reason: String },
    #[error("token {0} has not been generated yet")]
    TokenNotGenerated(usize),
    #[error("empty beam at position {0}")]
    EmptyBeam(usize),
    #[error("no initially preferred parse on the beam at position {0}")]
    NoInitialParse(usize),
    #[error("no globally correct parse on the full-parallel beam at position {0}")]
    NoCorrectParse(usize),
    #[error("item has no full-parallel substitute")]
    NoSubstitute,
    #[error(transparent)]
    Beam(#[from] BeamError),
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error(transparent)]
    Scorer(#[from] ScorerError),
}

/// Required and forbidden ancestor labels of one token.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterpretationPredicate {
    pub token_index: usize,
    #[serde(default)]
    pub required_ancestors: BTreeSet<String>,
    #[serde(default)]
    pub forbidden_ancestors: BTreeSet<String>,
}

impl InterpretationPredicate {
    pub fn holds(&self, state: &ParserState) -> Result<bool, EngineError> {
        let path = state
            .ancestor_labels(self.token_index)
            .ok_or(EngineError::TokenNotGenerated(self.token_index))?;
        let labels: HashSet<&str> = path.iter().map(|l| &**l).collect();
        Ok(self
            .required_ancestors
            .iter()
            .all(|l| labels.contains(l.as_str()))
            && !self
                .forbidden_ancestors
                .iter()
                .any(|l| labels.contains(l.as_str())))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterpretationBin {
    InitialPreferred,
    GloballyCorrect,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Construction {
    #[serde(rename = "MV_RR")]
    MvRr,
    #[serde(rename = "NP_S")]
    NpS,
    #[serde(rename = "NP_Z")]
    NpZ,
}

impl fmt::Display for Construction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Construction::MvRr => "MV_RR",
            Construction::NpS => "NP_S",
            Construction::NpZ => "NP_Z",
        })
    }
}

/// One garden path item: a temporarily ambiguous sentence, its unambiguous
/// control, and the structural definition of both readings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstructionSpec {
    pub item_id: String,
    pub construction: Construction,
    pub ambiguous_sentence: Vec<String>,
    pub unambiguous_sentence: Vec<String>,
    pub ambiguous_verb_index: usize,
    /// Index of the disambiguating word in the ambiguous sentence.
    pub disambiguating_index: usize,
    /// Index of the same word in the unambiguous sentence, when the two
    /// versions differ in length before it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unambiguous_disambiguating_index: Option<usize>,
    pub initial_predicate: InterpretationPredicate,
    pub correct_predicate: InterpretationPredicate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fullparallel_substitute: Option<String>,
}

/// Critical region: the disambiguating word and two spillover words.
pub const REGIONS: [&str; 3] = ["disambiguating", "spillover1", "spillover2"];

impl ConstructionSpec {
    pub fn validate(&self) -> Result<(), EngineError> {
        let fail = |reason: String| EngineError::Spec {
            item: self.item_id.clone(),
            reason,
        };
        let verb = self.ambiguous_verb_index;
        if verb >= self.ambiguous_sentence.len() {
            return Err(fail("ambiguous verb index is outside the sentence".into()));
        }
        for (name, p) in [
            ("initial", &self.initial_predicate),
            ("correct", &self.correct_predicate),
        ] {
            if p.token_index != verb {
                return Err(fail(format!(
                    "{name} predicate does not refer to the ambiguous verb"
                )));
            }
            if !p.required_ancestors.is_disjoint(&p.forbidden_ancestors) {
                return Err(fail(format!(
                    "{name} predicate requires and forbids the same label"
                )));
            }
        }
        if self.disambiguating_index <= verb {
            return Err(fail(
                "disambiguating word must follow the ambiguous verb".into(),
            ));
        }
        if self.disambiguating_index + 2 >= self.ambiguous_sentence.len() {
            return Err(fail(
                "critical region runs past the ambiguous sentence".into(),
            ));
        }
        if self.unambiguous_disambiguating() + 2 >= self.unambiguous_sentence.len() {
            return Err(fail(
                "critical region runs past the unambiguous sentence".into(),
            ));
        }
        let a = &self.ambiguous_sentence[self.disambiguating_index..self.disambiguating_index + 3];
        let u = &self.unambiguous_sentence
            [self.unambiguous_disambiguating()..self.unambiguous_disambiguating() + 3];
        if a != u {
            return Err(fail("critical regions of the two sentences differ".into()));
        }
        if let Some(s) = &self.fullparallel_substitute {
            if !crate::treebank::valid_symbol(s) {
                return Err(fail(format!("substitute {s:?} is not a valid token")));
            }
        }
        Ok(())
    }

    pub fn unambiguous_disambiguating(&self) -> usize {
        self.unambiguous_disambiguating_index
            .unwrap_or(self.disambiguating_index)
    }

    /// Bin of a parse state whose verb has been generated. A parse matching
    /// both predicates counts as initially preferred.
    pub fn classify(&self, state: &ParserState) -> Result<InterpretationBin, EngineError> {
        if self.initial_predicate.holds(state)? {
            Ok(InterpretationBin::InitialPreferred)
        } else if self.correct_predicate.holds(state)? {
            Ok(InterpretationBin::GloballyCorrect)
        } else {
            Ok(InterpretationBin::Other)
        }
    }

    /// The ambiguous sentence with the verb replaced by the substitute.
    pub fn modified_sentence(&self) -> Result<Vec<String>, EngineError> {
        let sub = self
            .fullparallel_substitute
            .as_ref()
            .ok_or(EngineError::NoSubstitute)?;
        let mut s = self.ambiguous_sentence.clone();
        s[self.ambiguous_verb_index] = sub.clone();
        Ok(s)
    }
}

/// Reads a JSON file holding one spec or an array of specs, validating each.
pub fn parse_construction_specs(text: &str) -> Result<Vec<ConstructionSpec>, EngineError> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        Many(Vec<ConstructionSpec>),
        One(Box<ConstructionSpec>),
    }
    let specs = match serde_json::from_str(text) {
        Ok(OneOrMany::Many(v)) => v,
        Ok(OneOrMany::One(s)) => vec![*s],
        Err(e) => {
            return Err(EngineError::Spec {
                item: "<file>".into(),
                reason: e.to_string(),
            })
        }
    };
    for s in &specs {
        s.validate()?;
    }
    Ok(specs)
}

/// Normalized probability per bin at one position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Profile {
    /// Number of words consumed.
    pub position: usize,
    pub initial: f64,
    pub correct: f64,
    pub other: f64,
}

impl Profile {
    fn from_weighted(
        position: usize,
        weighted: &[(InterpretationBin, f64)],
    ) -> Result<Profile, EngineError> {
        let total = log_sum_exp(weighted.iter().map(|w| w.1));
        if weighted.is_empty() || total == f64::NEG_INFINITY {
            return Err(EngineError::EmptyBeam(position));
        }
        let mass = |bin| {
            weighted
                .iter()
                .filter(|w| w.0 == bin)
                .map(|w| (w.1 - total).exp())
                .sum::<f64>()
        };
        Ok(Profile {
            position,
            initial: mass(InterpretationBin::InitialPreferred),
            correct: mass(InterpretationBin::GloballyCorrect),
            other: mass(InterpretationBin::Other),
        })
    }

    pub fn total(&self) -> f64 {
        self.initial + self.correct + self.other
    }
}

/// Bin masses of a single beam.
pub fn beam_profile(beam: &WordBeam, spec: &ConstructionSpec) -> Result<Profile, EngineError> {
    let weighted = beam
        .items
        .iter()
        .map(|it| Ok((spec.classify(&it.state)?, it.logprob)))
        .collect::<Result<Vec<_>, EngineError>>()?;
    Profile::from_weighted(beam.word_index, &weighted)
}

/// Profiles of every snapshot taken after the ambiguous verb.
pub fn interpretation_profile(
    snapshots: &[WordBeam],
    spec: &ConstructionSpec,
) -> Result<Vec<Profile>, EngineError> {
    snapshots
        .iter()
        .filter(|b| b.word_index > spec.ambiguous_verb_index)
        .map(|b| beam_profile(b, spec))
        .collect()
}

/// Profile over every parse of `prefix`, by enumeration.
pub fn exact_interpretation_profile(
    prefix: &[String],
    spec: &ConstructionSpec,
    enumerator: &Enumerator<'_>,
) -> Result<Profile, EngineError> {
    let weighted = enumerator
        .enumerate_parses(prefix)?
        .iter()
        .map(|d| Ok((spec.classify(&d.state)?, d.logprob)))
        .collect::<Result<Vec<_>, EngineError>>()?;
    Profile::from_weighted(prefix.len(), &weighted)
}

/// Where the forced garden path filter applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FilterScope {
    /// Every word after the ambiguous verb.
    #[default]
    FromVerb,
    /// Only the disambiguating word.
    DisambiguationOnly,
}

/// Restricts a beam to initially preferred parses. A beam on which no parse
/// has committed to either reading yet is returned unchanged.
pub fn filter_initial(beam: &WordBeam, spec: &ConstructionSpec) -> Result<WordBeam, EngineError> {
    let mut keep = Vec::new();
    let mut decided = false;
    for it in &beam.items {
        match spec.classify(&it.state)? {
            InterpretationBin::InitialPreferred => {
                decided = true;
                keep.push(it.clone());
            }
            InterpretationBin::GloballyCorrect => decided = true,
            InterpretationBin::Other => {}
        }
    }
    if !decided {
        return Ok(beam.clone());
    }
    if keep.is_empty() {
        return Err(EngineError::NoInitialParse(beam.word_index));
    }
    let prefix_mass = log_sum_exp(keep.iter().map(|i| i.logprob));
    Ok(WordBeam {
        word_index: beam.word_index,
        items: keep,
        prefix_mass,
    })
}

fn surprisal_from(
    beam: &WordBeam,
    token: &str,
    scorer: &dyn Scorer,
    strategy: Strategy,
    config: &BeamConfig,
) -> Result<f64, EngineError> {
    Ok(nats_to_bits(
        advance_word(beam, token, scorer, strategy, config)?.word_logmass,
    ))
}

/// Per-word surprisals of the ambiguous sentence under the forced garden
/// path condition. `plain` must be the snapshots of an unfiltered run of the
/// ambiguous sentence under `config`.
pub fn forced_gp_surprisal_from(
    spec: &ConstructionSpec,
    plain: &[WordBeam],
    plain_surprisals: &[f64],
    scorer: &dyn Scorer,
    strategy: Strategy,
    config: &BeamConfig,
    scope: FilterScope,
) -> Result<Vec<f64>, EngineError> {
    let mut out = Vec::with_capacity(spec.ambiguous_sentence.len());
    for (j, tok) in spec.ambiguous_sentence.iter().enumerate() {
        let filtered = match scope {
            FilterScope::FromVerb => j > spec.ambiguous_verb_index,
            FilterScope::DisambiguationOnly => j == spec.disambiguating_index,
        };
        if filtered {
            let beam = filter_initial(&plain[j], spec)?;
            out.push(surprisal_from(&beam, tok, scorer, strategy, config)?);
        } else {
            out.push(plain_surprisals[j]);
        }
    }
    Ok(out)
}

pub fn forced_gp_surprisal(
    spec: &ConstructionSpec,
    scorer: &dyn Scorer,
    strategy: Strategy,
    config: &BeamConfig,
    scope: FilterScope,
) -> Result<Vec<f64>, EngineError> {
    let run = surprisal_per_word(&spec.ambiguous_sentence, scorer, strategy, config)?;
    forced_gp_surprisal_from(
        spec,
        &run.snapshots,
        &run.surprisals(),
        scorer,
        strategy,
        config,
        scope,
    )
}

/// Output of the full parallel condition.
#[derive(Debug, Clone, PartialEq)]
pub struct FullParallel {
    pub surprisals: Vec<f64>,
    /// The union beams, indexed like snapshots, from just after the verb.
    pub unions: Vec<WordBeam>,
    /// Positions, in words consumed, whose union beam holds no committed
    /// parse at all (so correctness cannot be judged yet).
    pub undecided_positions: Vec<usize>,
}

/// Replaces the shifted verb in `item` and rescores the whole derivation.
/// `None` if the result has zero probability.
fn substitute_verb(
    item: &BeamItem,
    spec: &ConstructionSpec,
    scorer: &dyn Scorer,
    strategy: Strategy,
    config: &BeamConfig,
) -> Result<Option<BeamItem>, EngineError> {
    let verb = Action::shift(&spec.ambiguous_sentence[spec.ambiguous_verb_index]);
    let mut shifts = 0;
    let mut actions = item.actions.clone();
    for a in actions.iter_mut() {
        if matches!(a, Action::Shift(_)) {
            if shifts == spec.ambiguous_verb_index {
                *a = verb.clone();
                break;
            }
            shifts += 1;
        }
    }
    let logprob = sequence_logprob(scorer, &actions, strategy, &config.limits)?;
    if logprob == f64::NEG_INFINITY {
        return Ok(None);
    }
    let state = crate::transition::replay(&actions, strategy).expect("rescoring checked legality");
    Ok(Some(BeamItem {
        actions,
        state,
        logprob,
    }))
}

/// `b ∪ b''`, deduplicated by action sequence.
fn union(b: &WordBeam, b2: Vec<BeamItem>) -> WordBeam {
    let mut seen: HashSet<Vec<Action>> = b.items.iter().map(|i| i.actions.clone()).collect();
    let mut items = b.items.clone();
    for it in b2 {
        if seen.insert(it.actions.clone()) {
            items.push(it);
        }
    }
    let n = items.len();
    prune(&mut items, n);
    let prefix_mass = log_sum_exp(items.iter().map(|i| i.logprob));
    WordBeam {
        word_index: b.word_index,
        items,
        prefix_mass,
    }
}

/// Per-word surprisals of the ambiguous sentence under the full parallel
/// condition, given the plain snapshots of the ambiguous sentence.
pub fn full_parallel_surprisal_from(
    spec: &ConstructionSpec,
    plain: &[WordBeam],
    plain_surprisals: &[f64],
    scorer: &dyn Scorer,
    strategy: Strategy,
    config: &BeamConfig,
) -> Result<FullParallel, EngineError> {
    let modified = spec.modified_sentence()?;
    let counterfactual = surprisal_per_word(&modified, scorer, strategy, config)?;
    let verb = spec.ambiguous_verb_index;
    let n = spec.ambiguous_sentence.len();
    let mut unions = Vec::new();
    let mut undecided = Vec::new();
    for (j, snap) in counterfactual
        .snapshots
        .iter()
        .enumerate()
        .take(n + 1)
        .skip(verb + 1)
    {
        let mut b2 = Vec::new();
        for it in &snap.items {
            if let Some(s) = substitute_verb(it, spec, scorer, strategy, config)? {
                b2.push(s);
            }
        }
        if j == n
            && !b2.iter().any(|it| {
                spec.classify(&it.state)
                    .map(|b| b == InterpretationBin::GloballyCorrect)
                    .unwrap_or(false)
            })
        {
            return Err(EngineError::NoCorrectParse(j));
        }
        let u = union(&plain[j], b2);
        if j <= spec.disambiguating_index + 1 {
            let bins = u
                .items
                .iter()
                .map(|it| spec.classify(&it.state))
                .collect::<Result<Vec<_>, _>>()?;
            if !bins.contains(&InterpretationBin::GloballyCorrect) {
                if bins.contains(&InterpretationBin::InitialPreferred) {
                    return Err(EngineError::NoCorrectParse(j));
                }
                undecided.push(j);
            }
        }
        unions.push(u);
    }
    let mut out = plain_surprisals[..=verb].to_vec();
    for j in verb + 1..n {
        let beam = &unions[j - verb - 1];
        out.push(surprisal_from(
            beam,
            &spec.ambiguous_sentence[j],
            scorer,
            strategy,
            config,
        )?);
    }
    Ok(FullParallel {
        surprisals: out,
        unions,
        undecided_positions: undecided,
    })
}

pub fn full_parallel_surprisal(
    spec: &ConstructionSpec,
    scorer: &dyn Scorer,
    strategy: Strategy,
    config: &BeamConfig,
) -> Result<FullParallel, EngineError> {
    let run = surprisal_per_word(&spec.ambiguous_sentence, scorer, strategy, config)?;
    full_parallel_surprisal_from(
        spec,
        &run.snapshots,
        &run.surprisals(),
        scorer,
        strategy,
        config,
    )
}

/// Ambiguous minus unambiguous surprisal over the critical region.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GpEffect {
    /// Per region word: (region name, ambiguous bits, unambiguous bits).
    pub components: Vec<(String, f64, f64)>,
    pub summed: f64,
}

impl GpEffect {
    pub fn region(&self, name: &str) -> Option<f64> {
        self.components
            .iter()
            .find(|c| c.0 == name)
            .map(|c| c.1 - c.2)
    }
}

pub fn gp_effect_surprisal(
    spec: &ConstructionSpec,
    ambiguous: &[f64],
    unambiguous: &[f64],
) -> Result<GpEffect, EngineError> {
    let d = spec.disambiguating_index;
    let u = spec.unambiguous_disambiguating();
    if ambiguous.len() != spec.ambiguous_sentence.len()
        || unambiguous.len() != spec.unambiguous_sentence.len()
    {
        return Err(EngineError::Spec {
            item: spec.item_id.clone(),
            reason: "surprisal vectors do not match the sentences".into(),
        });
    }
    if d + 2 >= ambiguous.len() || u + 2 >= unambiguous.len() {
        return Err(EngineError::Spec {
            item: spec.item_id.clone(),
            reason: "critical region runs past the sentence".into(),
        });
    }
    let components: Vec<(String, f64, f64)> = REGIONS
        .iter()
        .enumerate()
        .map(|(k, r)| (r.to_string(), ambiguous[d + k], unambiguous[u + k]))
        .collect();
    let summed = components.iter().map(|c| c.1 - c.2).sum();
    Ok(GpEffect { components, summed })
}

/// Experimental condition for the ambiguous sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Condition {
    Beam(usize),
    ForcedGardenPath,
    FullParallel,
}

impl Condition {
    pub fn name(&self) -> &'static str {
        match self {
            Condition::Beam(_) => "beam",
            Condition::ForcedGardenPath => "forced_garden_path",
            Condition::FullParallel => "full_parallel",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionResult {
    pub condition: Condition,
    pub k_w: usize,
    pub ambiguous: Vec<f64>,
    pub unambiguous: Vec<f64>,
    pub effect: GpEffect,
}

/// Settings for a garden path run.
#[derive(Debug, Clone, PartialEq)]
pub struct GpSettings {
    pub word_beams: Vec<usize>,
    /// Width used for the counterfactual conditions and for the
    /// unambiguous sentence under them.
    pub reference_word_beam: usize,
    pub base: BeamConfig,
    pub scope: FilterScope,
}

#[derive(Debug)]
pub struct GardenPathResult {
    pub item_id: String,
    pub construction: Construction,
    pub conditions: Vec<ConditionResult>,
    /// Conditions that could not be computed, with the reason.
    pub failures: Vec<(Condition, String)>,
}

/// Runs every condition for one item. Failures of a single condition are
/// recorded and do not stop the others.
pub fn run_garden_path(
    spec: &ConstructionSpec,
    scorer: &dyn Scorer,
    strategy: Strategy,
    settings: &GpSettings,
) -> Result<GardenPathResult, EngineError> {
    spec.validate()?;
    let mut widths: Vec<usize> = settings.word_beams.clone();
    widths.push(settings.reference_word_beam);
    widths.sort_unstable();
    widths.dedup();

    let mut result = GardenPathResult {
        item_id: spec.item_id.clone(),
        construction: spec.construction,
        conditions: Vec::new(),
        failures: Vec::new(),
    };
    let mut reference = None;
    for &k in &widths {
        let cfg = BeamConfig {
            word_beam: k,
            ..settings.base
        };
        let amb = surprisal_per_word(&spec.ambiguous_sentence, scorer, strategy, &cfg);
        let una = surprisal_per_word(&spec.unambiguous_sentence, scorer, strategy, &cfg);
        match (amb, una) {
            (Ok(a), Ok(u)) => {
                let (sa, su) = (a.surprisals(), u.surprisals());
                if settings.word_beams.contains(&k) {
                    let effect = gp_effect_surprisal(spec, &sa, &su)?;
                    result.conditions.push(ConditionResult {
                        condition: Condition::Beam(k),
                        k_w: k,
                        ambiguous: sa.clone(),
                        unambiguous: su.clone(),
                        effect,
                    });
                }
                if k == settings.reference_word_beam {
                    reference = Some((a, su));
                }
            }
            (Err(e), _) | (_, Err(e)) => {
                if settings.word_beams.contains(&k) {
                    result.failures.push((Condition::Beam(k), e.to_string()));
                }
                if k == settings.reference_word_beam {
                    let msg = format!("reference run failed: {e}");
                    result
                        .failures
                        .push((Condition::ForcedGardenPath, msg.clone()));
                    result.failures.push((Condition::FullParallel, msg));
                }
            }
        }
    }

    if let Some((amb, su)) = reference {
        let cfg = BeamConfig {
            word_beam: settings.reference_word_beam,
            ..settings.base
        };
        let sa = amb.surprisals();
        let forced = forced_gp_surprisal_from(
            spec,
            &amb.snapshots,
            &sa,
            scorer,
            strategy,
            &cfg,
            settings.scope,
        );
        push_condition(
            &mut result,
            spec,
            Condition::ForcedGardenPath,
            &cfg,
            forced,
            &su,
        );
        if spec.fullparallel_substitute.is_some() {
            let fp =
                full_parallel_surprisal_from(spec, &amb.snapshots, &sa, scorer, strategy, &cfg)
                    .map(|fp| fp.surprisals);
            push_condition(&mut result, spec, Condition::FullParallel, &cfg, fp, &su);
        } else {
            result.failures.push((
                Condition::FullParallel,
                EngineError::NoSubstitute.to_string(),
            ));
        }
    }
    Ok(result)
}

fn push_condition(
    result: &mut GardenPathResult,
    spec: &ConstructionSpec,
    condition: Condition,
    cfg: &BeamConfig,
    ambiguous: Result<Vec<f64>, EngineError>,
    unambiguous: &[f64],
) {
    let outcome = ambiguous.and_then(|a| {
        let effect = gp_effect_surprisal(spec, &a, unambiguous)?;
        Ok((a, effect))
    });
    match outcome {
        Ok((a, effect)) => result.conditions.push(ConditionResult {
            condition,
            k_w: cfg.word_beam,
            ambiguous: a,
            unambiguous: unambiguous.to_vec(),
            effect,
        }),
        Err(e) => result.failures.push((condition, e.to_string())),
    }
}
