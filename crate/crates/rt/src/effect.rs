//! Garden path effects in milliseconds with item-level bootstrap intervals.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::RtError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Disambiguating,
    Spillover1,
    Spillover2,
    Summed,
}

impl Region {
    pub const ALL: [Region; 4] = [
        Region::Disambiguating,
        Region::Spillover1,
        Region::Spillover2,
        Region::Summed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Region::Disambiguating => "disambiguating",
            Region::Spillover1 => "spillover1",
            Region::Spillover2 => "spillover2",
            Region::Summed => "summed",
        }
    }

    pub fn from_name(s: &str) -> Option<Region> {
        Region::ALL.into_iter().find(|r| r.name() == s)
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Per-region values of a sentence whose disambiguating word is at
/// `disambiguating`, read from per-position values.
pub fn region_values(
    per_position: &BTreeMap<usize, f64>,
    disambiguating: usize,
) -> Result<[(Region, f64); 4], RtError> {
    let at = |i: usize| {
        per_position
            .get(&i)
            .copied()
            .ok_or(RtError::MissingPosition(i))
    };
    let (d, s1, s2) = (
        at(disambiguating)?,
        at(disambiguating + 1)?,
        at(disambiguating + 2)?,
    );
    Ok([
        (Region::Disambiguating, d),
        (Region::Spillover1, s1),
        (Region::Spillover2, s2),
        (Region::Summed, d + s1 + s2),
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ambiguity {
    Ambiguous,
    Unambiguous,
}

/// A predicted reading time for one region of one sentence version.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionPrediction {
    pub item_id: String,
    pub seed: u64,
    pub ambiguity: Ambiguity,
    pub predicted_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub seed: u64,
    /// Coverage of the interval.
    pub level: f64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            replicates: 2000,
            seed: 0,
            level: 0.95,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectEstimate {
    pub construction: String,
    pub region: Region,
    pub estimate_ms: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_items: usize,
    pub n_seeds: usize,
}

/// Mean ambiguous-minus-unambiguous difference over items and seeds, with a
/// percentile interval from resampling items and, independently, seeds.
/// Every item must have both versions under every seed.
pub fn gp_effect_ms(
    construction: &str,
    region: Region,
    predictions: &[RegionPrediction],
    cfg: &BootstrapConfig,
) -> Result<EffectEstimate, RtError> {
    if cfg.replicates == 0 || !(cfg.level > 0.0 && cfg.level < 1.0) {
        return Err(RtError::BadConfig(
            "bootstrap needs replicates > 0 and 0 < level < 1".into(),
        ));
    }
    type Versions = (Option<f64>, Option<f64>);
    let mut cells: BTreeMap<(&str, u64), Versions> = BTreeMap::new();
    for p in predictions {
        let cell = cells.entry((&p.item_id, p.seed)).or_default();
        let slot = match p.ambiguity {
            Ambiguity::Ambiguous => &mut cell.0,
            Ambiguity::Unambiguous => &mut cell.1,
        };
        if slot.replace(p.predicted_ms).is_some() {
            return Err(RtError::Unpaired(format!(
                "{} seed {} has two {:?} predictions",
                p.item_id, p.seed, p.ambiguity
            )));
        }
    }
    if cells.is_empty() {
        return Err(RtError::EmptyEffect);
    }
    let items: Vec<&str> = cells
        .keys()
        .map(|k| k.0)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let seeds: Vec<u64> = cells
        .keys()
        .map(|k| k.1)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut diff = vec![vec![0.0; seeds.len()]; items.len()];
    for (i, item) in items.iter().enumerate() {
        for (s, seed) in seeds.iter().enumerate() {
            match cells.get(&(*item, *seed)) {
                Some((Some(a), Some(u))) => diff[i][s] = a - u,
                _ => {
                    return Err(RtError::Unpaired(format!(
                        "{item} seed {seed} lacks a version"
                    )))
                }
            }
        }
    }
    let mean_of = |is: &mut dyn Iterator<Item = usize>, ss: &[usize]| {
        let mut total = 0.0;
        let mut n = 0usize;
        for i in is {
            for &s in ss {
                total += diff[i][s];
                n += 1;
            }
        }
        total / n as f64
    };
    let all_seeds: Vec<usize> = (0..seeds.len()).collect();
    let estimate = mean_of(&mut (0..items.len()), &all_seeds);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut stats = Vec::with_capacity(cfg.replicates);
    let mut ss = vec![0usize; seeds.len()];
    for _ in 0..cfg.replicates {
        let is: Vec<usize> = (0..items.len())
            .map(|_| rng.random_range(0..items.len()))
            .collect();
        for s in ss.iter_mut() {
            *s = rng.random_range(0..seeds.len());
        }
        stats.push(mean_of(&mut is.into_iter(), &ss));
    }
    stats.sort_by(f64::total_cmp);
    let tail = (1.0 - cfg.level) / 2.0;
    Ok(EffectEstimate {
        construction: construction.to_string(),
        region,
        estimate_ms: estimate,
        ci_low: quantile(&stats, tail),
        ci_high: quantile(&stats, 1.0 - tail),
        n_items: items.len(),
        n_seeds: seeds.len(),
    })
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (h.floor() as usize, h.ceil() as usize);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// An empirically observed range for one construction and region, supplied
/// by the user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalBand {
    pub construction: String,
    pub region: Region,
    pub low_ms: f64,
    #[serde(default)]
    pub high_ms: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandFlag {
    Below,
    Within,
    Above,
}

impl BandFlag {
    pub fn name(self) -> &'static str {
        match self {
            BandFlag::Below => "below",
            BandFlag::Within => "within",
            BandFlag::Above => "above",
        }
    }
}

/// Where a point estimate falls relative to a band.
pub fn band_flag(estimate_ms: f64, band: &EmpiricalBand) -> BandFlag {
    if estimate_ms < band.low_ms {
        BandFlag::Below
    } else if band.high_ms.is_some_and(|h| estimate_ms > h) {
        BandFlag::Above
    } else {
        BandFlag::Within
    }
}
