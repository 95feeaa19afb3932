//! Synthetic filler data: reading times generated from a known linear
//! function of real surprisals plus Gaussian noise.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::rows::{token_length, FrequencyTable, TokenRow};
use crate::RtError;

/// Surprisals of one sentence, one value per token.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceSurprisals {
    pub item_id: String,
    pub tokens: Vec<String>,
    pub surprisals: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub intercept: f64,
    /// Coefficients on the surprisal of the current and two preceding words.
    pub surprisal: [f64; 3],
    pub position: f64,
    pub length: f64,
    pub logfreq: f64,
    pub noise_sd: f64,
    /// Rows with lag-2 context to generate; sentence-initial rows come on
    /// top of these.
    pub n_rows: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            intercept: 250.0,
            surprisal: [2.0, 0.5, 0.25],
            position: 0.0,
            length: 0.0,
            logfreq: 0.0,
            noise_sd: 30.0,
            n_rows: 5000,
            seed: 0,
        }
    }
}

/// Cycles through `sentences`, one new participant per pass, until
/// `cfg.n_rows` rows with full lag context exist.
pub fn synth_fillers(
    cfg: &SynthConfig,
    sentences: &[SentenceSurprisals],
) -> Result<Vec<TokenRow>, RtError> {
    if !(cfg.noise_sd >= 0.0 && cfg.noise_sd.is_finite()) {
        return Err(RtError::BadConfig(
            "noise_sd must be finite and nonnegative".into(),
        ));
    }
    for s in sentences {
        if s.tokens.len() != s.surprisals.len() {
            return Err(RtError::BadConfig(format!(
                "{}: one surprisal per token required",
                s.item_id
            )));
        }
        if s.surprisals.iter().any(|x| !x.is_finite()) {
            return Err(RtError::BadConfig(format!(
                "{}: surprisals must be finite",
                s.item_id
            )));
        }
    }
    if cfg.n_rows > 0 && !sentences.iter().any(|s| s.tokens.len() > 2) {
        return Err(RtError::BadConfig(
            "no sentence has more than two tokens".into(),
        ));
    }
    let freq = FrequencyTable::from_tokens(
        sentences
            .iter()
            .flat_map(|s| s.tokens.iter().map(String::as_str)),
    );
    let noise = Normal::new(0.0, cfg.noise_sd).map_err(|e| RtError::BadConfig(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::new();
    let mut full = 0usize;
    let mut pass = 0usize;
    while full < cfg.n_rows {
        for s in sentences {
            for (pos, tok) in s.tokens.iter().enumerate() {
                if full >= cfg.n_rows {
                    return Ok(out);
                }
                let lag = |k: usize| pos.checked_sub(k).map_or(0.0, |i| s.surprisals[i]);
                let (length, logfreq) = (token_length(tok), freq.logfreq(tok));
                let mean = cfg.intercept
                    + cfg.surprisal[0] * lag(0)
                    + cfg.surprisal[1] * lag(1)
                    + cfg.surprisal[2] * lag(2)
                    + cfg.position * pos as f64
                    + cfg.length * length
                    + cfg.logfreq * logfreq;
                // Redraw the rare noise values that would make a time nonpositive.
                let mut rt = mean + noise.sample(&mut rng);
                for _ in 0..1000 {
                    if rt > 0.0 {
                        break;
                    }
                    rt = mean + noise.sample(&mut rng);
                }
                if rt <= 0.0 {
                    return Err(RtError::BadConfig(format!(
                        "mean reading time {mean} is not positive"
                    )));
                }
                out.push(TokenRow {
                    participant_id: format!("p{pass}"),
                    item_id: s.item_id.clone(),
                    position: pos,
                    token: tok.clone(),
                    rt_ms: rt,
                    length,
                    logfreq,
                    surprisal: s.surprisals[pos],
                    construction: None,
                    ambiguity: None,
                });
                if pos >= 2 {
                    full += 1;
                }
            }
        }
        pass += 1;
    }
    Ok(out)
}
