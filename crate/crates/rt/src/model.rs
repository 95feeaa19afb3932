//! Least-squares linking models from word measures and surprisal to reading
//! time.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::rows::{lagged, Lagged, RowKey, TokenRow};
use crate::RtError;

/// Predictors shared by both models: position, and length, log frequency and
/// their product for the current and two preceding words.
pub const BASELINE_PREDICTORS: [&str; 10] = [
    "position",
    "length0",
    "logfreq0",
    "length0:logfreq0",
    "length1",
    "logfreq1",
    "length1:logfreq1",
    "length2",
    "logfreq2",
    "length2:logfreq2",
];

pub const SURPRISAL_PREDICTORS: [&str; 3] = ["surprisal0", "surprisal1", "surprisal2"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Baseline,
    Full,
}

impl ModelKind {
    pub fn predictor_names(self) -> Vec<&'static str> {
        let mut v = BASELINE_PREDICTORS.to_vec();
        if self == ModelKind::Full {
            v.extend(SURPRISAL_PREDICTORS);
        }
        v
    }

    fn values(self, l: &Lagged) -> Vec<f64> {
        let mut v = vec![l.position];
        for lag in 0..3 {
            v.extend([
                l.length[lag],
                l.logfreq[lag],
                l.length[lag] * l.logfreq[lag],
            ]);
        }
        if self == ModelKind::Full {
            v.extend(l.surprisal);
        }
        v
    }
}

/// How reading times are adjusted before fitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Centering {
    None,
    /// Subtract each participant's and each item's deviation from the grand
    /// mean, from the reading times and from every predictor.
    #[default]
    ParticipantItem,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    /// Rows required per predictor.
    pub min_rows_per_predictor: usize,
    pub centering: Centering,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            min_rows_per_predictor: 10,
            centering: Centering::ParticipantItem,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub mean: f64,
    /// Zero for a predictor that was constant in the training rows.
    pub sd: f64,
}

/// A fitted model. Coefficients are stored on the standardized scale used
/// for fitting; [`LinearModel::raw_coefficients`] converts them back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub kind: ModelKind,
    pub predictors: Vec<String>,
    pub scaling: Vec<Scaling>,
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    /// Maximum-likelihood residual variance.
    pub residual_variance: f64,
    pub log_likelihood: f64,
    pub n_rows: usize,
    pub centering: Centering,
    /// Hash of the training rows, compared before taking likelihood
    /// differences.
    pub fingerprint: String,
}

impl LinearModel {
    pub fn raw_coefficients(&self) -> Vec<f64> {
        self.coefficients
            .iter()
            .zip(&self.scaling)
            .map(|(b, s)| if s.sd > 0.0 { b / s.sd } else { 0.0 })
            .collect()
    }

    pub fn raw_intercept(&self) -> f64 {
        let shift: f64 = self
            .raw_coefficients()
            .iter()
            .zip(&self.scaling)
            .map(|(b, s)| b * s.mean)
            .sum();
        self.intercept - shift
    }

    /// Raw-unit coefficient of a named predictor.
    pub fn coefficient(&self, name: &str) -> Option<f64> {
        let i = self.predictors.iter().position(|p| p == name)?;
        Some(self.raw_coefficients()[i])
    }

    /// Predictor values on the model's standardized scale.
    pub fn standardize(&self, l: &Lagged) -> Vec<f64> {
        self.kind
            .values(l)
            .iter()
            .zip(&self.scaling)
            .map(|(x, s)| if s.sd > 0.0 { (x - s.mean) / s.sd } else { 0.0 })
            .collect()
    }

    pub fn predict_standardized(&self, z: &[f64]) -> Result<f64, RtError> {
        if z.len() != self.coefficients.len() {
            return Err(RtError::PredictorCount {
                expected: self.coefficients.len(),
                found: z.len(),
            });
        }
        Ok(self.intercept
            + z.iter()
                .zip(&self.coefficients)
                .map(|(x, b)| x * b)
                .sum::<f64>())
    }

    pub fn predict_lagged(&self, l: &Lagged) -> f64 {
        self.predict_standardized(&self.standardize(l))
            .expect("standardize yields one value per predictor")
    }
}

fn fingerprint(data: &[(RowKey, Lagged)]) -> String {
    // FNV-1a over the row identities and reading times.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |bytes: &[u8]| {
        for b in bytes {
            h ^= u64::from(*b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    };
    for (k, l) in data {
        eat(k.participant_id.as_bytes());
        eat(&[0]);
        eat(k.item_id.as_bytes());
        eat(&[0]);
        eat(&(k.position as u64).to_le_bytes());
        eat(&l.rt_ms.to_bits().to_le_bytes());
    }
    format!("{h:016x}")
}

/// Subtracts each participant's and each item's deviation from the grand
/// mean, column by column. Grand means are unchanged.
fn center_columns(data: &[(RowKey, Lagged)], columns: &mut [Vec<f64>]) {
    for key in [0usize, 1] {
        let group = |k: &RowKey| -> String {
            if key == 0 {
                k.participant_id.clone()
            } else {
                k.item_id.clone()
            }
        };
        let ids: Vec<String> = data.iter().map(|d| group(&d.0)).collect();
        for col in columns.iter_mut() {
            let grand = col.iter().sum::<f64>() / col.len() as f64;
            let mut acc: HashMap<&str, (f64, usize)> = HashMap::new();
            for (id, v) in ids.iter().zip(col.iter()) {
                let e = acc.entry(id).or_default();
                e.0 += v;
                e.1 += 1;
            }
            let shift: Vec<f64> = ids
                .iter()
                .map(|id| {
                    let (sum, n) = acc[id.as_str()];
                    sum / n as f64 - grand
                })
                .collect();
            for (v, d) in col.iter_mut().zip(shift) {
                *v -= d;
            }
        }
    }
}

/// Fits `kind` to the rows that have lag-2 context.
pub fn fit(rows: &[TokenRow], kind: ModelKind, opts: &FitOptions) -> Result<LinearModel, RtError> {
    let data = lagged(rows)?;
    let names = kind.predictor_names();
    let p = names.len();
    let n = data.len();
    let needed = opts.min_rows_per_predictor.max(1) * p;
    if n < needed {
        return Err(RtError::InsufficientRows { rows: n, needed });
    }
    // Column-major: the response first, then each predictor.
    let mut columns: Vec<Vec<f64>> = vec![data.iter().map(|d| d.1.rt_ms).collect()];
    let values: Vec<Vec<f64>> = data.iter().map(|d| kind.values(&d.1)).collect();
    columns.extend((0..p).map(|j| values.iter().map(|r| r[j]).collect::<Vec<f64>>()));
    if opts.centering == Centering::ParticipantItem {
        center_columns(&data, &mut columns);
    }
    let y = columns.remove(0);
    let raw: Vec<Vec<f64>> = (0..n)
        .map(|i| columns.iter().map(|c| c[i]).collect())
        .collect();

    let mut scaling = Vec::with_capacity(p);
    for j in 0..p {
        let mean = raw.iter().map(|r| r[j]).sum::<f64>() / n as f64;
        let var = raw.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n as f64;
        let sd = var.sqrt();
        // Treat columns that vary only by rounding as constant.
        let sd = if sd <= 1e-12 * mean.abs().max(1.0) {
            0.0
        } else {
            sd
        };
        scaling.push(Scaling { mean, sd });
    }
    let active: Vec<usize> = (0..p).filter(|&j| scaling[j].sd > 0.0).collect();

    let y_mean = y.iter().sum::<f64>() / n as f64;
    let mut coefficients = vec![0.0; p];
    let mut fitted = vec![y_mean; n];
    if !active.is_empty() {
        let x = DMatrix::from_fn(n, active.len(), |i, c| {
            let j = active[c];
            (raw[i][j] - scaling[j].mean) / scaling[j].sd
        });
        let yc = DVector::from_iterator(n, y.iter().map(|v| v - y_mean));
        let svd = x.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if smin <= smax * 1e-9 {
            return Err(RtError::RankDeficient {
                predictors: active.iter().map(|&j| names[j].to_string()).collect(),
            });
        }
        let beta = svd
            .solve(&yc, 0.0)
            .map_err(|e| RtError::Numerical(e.to_string()))?;
        let fit = &x * &beta;
        for (c, &j) in active.iter().enumerate() {
            coefficients[j] = beta[c];
        }
        for (f, v) in fitted.iter_mut().zip(fit.iter()) {
            *f += v;
        }
    }
    let rss: f64 = y.iter().zip(&fitted).map(|(a, b)| (a - b).powi(2)).sum();
    let residual_variance = rss / n as f64;
    let log_likelihood = gaussian_log_likelihood(n, residual_variance);
    Ok(LinearModel {
        kind,
        predictors: names.iter().map(|s| s.to_string()).collect(),
        scaling,
        intercept: y_mean,
        coefficients,
        residual_variance,
        log_likelihood,
        n_rows: n,
        centering: opts.centering,
        fingerprint: fingerprint(&data),
    })
}

/// Log-likelihood of `n` residuals at their maximum-likelihood variance. A
/// perfect fit is reported as infinite.
fn gaussian_log_likelihood(n: usize, variance: f64) -> f64 {
    if variance <= 0.0 {
        return f64::INFINITY;
    }
    -0.5 * n as f64 * ((2.0 * std::f64::consts::PI * variance).ln() + 1.0)
}

pub fn fit_baseline(rows: &[TokenRow], opts: &FitOptions) -> Result<LinearModel, RtError> {
    fit(rows, ModelKind::Baseline, opts)
}

pub fn fit_full(rows: &[TokenRow], opts: &FitOptions) -> Result<LinearModel, RtError> {
    fit(rows, ModelKind::Full, opts)
}

/// Training log-likelihood gained by `full` over `baseline`.
pub fn delta_ll(full: &LinearModel, baseline: &LinearModel) -> Result<f64, RtError> {
    if full.fingerprint != baseline.fingerprint || full.n_rows != baseline.n_rows {
        return Err(RtError::RowMismatch);
    }
    if full.log_likelihood == f64::INFINITY && baseline.log_likelihood == f64::INFINITY {
        return Ok(0.0);
    }
    Ok(full.log_likelihood - baseline.log_likelihood)
}

/// Predicted reading time for every row with lag-2 context.
pub fn predict_rt(model: &LinearModel, rows: &[TokenRow]) -> Result<Vec<(RowKey, f64)>, RtError> {
    Ok(lagged(rows)?
        .into_iter()
        .map(|(k, l)| {
            let y = model.predict_lagged(&l);
            (k, y)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows_from(
        f: impl Fn(usize, usize) -> (f64, f64, f64, f64),
        n_items: usize,
        len: usize,
    ) -> Vec<TokenRow> {
        let mut out = Vec::new();
        for item in 0..n_items {
            for pos in 0..len {
                let (length, logfreq, surprisal, rt) = f(item, pos);
                out.push(TokenRow {
                    participant_id: format!("p{}", item % 3),
                    item_id: format!("i{item}"),
                    position: pos,
                    token: "w".into(),
                    rt_ms: rt,
                    length,
                    logfreq,
                    surprisal,
                    construction: None,
                    ambiguity: None,
                });
            }
        }
        out
    }

    fn pseudo(a: usize, b: usize, salt: u64) -> f64 {
        // A cheap deterministic scramble for test predictors.
        let mut x = (a as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)
            ^ (b as u64).wrapping_mul(0xbf58_476d_1ce4_e5b9)
            ^ salt;
        x ^= x >> 31;
        x = x.wrapping_mul(0x94d0_49bb_1331_11eb);
        x ^= x >> 29;
        (x % 10_000) as f64 / 1000.0
    }

    fn no_centering() -> FitOptions {
        FitOptions {
            centering: Centering::None,
            ..FitOptions::default()
        }
    }

    #[test]
    fn noiseless_coefficients_are_recovered() {
        let data = rows_from(
            |i, p| {
                let (l, f, s) = (1.0 + pseudo(i, p, 1), -pseudo(i, p, 2), pseudo(i, p, 3));
                (l, f, s, 0.0)
            },
            40,
            12,
        );
        let lookup: HashMap<(String, usize), (f64, f64, f64)> = data
            .iter()
            .map(|r| {
                (
                    (r.item_id.clone(), r.position),
                    (r.length, r.logfreq, r.surprisal),
                )
            })
            .collect();
        let data: Vec<TokenRow> = data
            .into_iter()
            .map(|mut r| {
                let cur = lookup[&(r.item_id.clone(), r.position)];
                let prev = r
                    .position
                    .checked_sub(1)
                    .map(|q| lookup[&(r.item_id.clone(), q)])
                    .unwrap_or_default();
                r.rt_ms = 250.0 + 3.0 * r.position as f64 + 7.0 * cur.0 - 4.0 * cur.1
                    + 0.5 * cur.0 * cur.1
                    + 2.0 * cur.2
                    + 0.75 * prev.2;
                r
            })
            .collect();
        let m = fit_full(&data, &no_centering()).unwrap();
        let want = [
            ("position", 3.0),
            ("length0", 7.0),
            ("logfreq0", -4.0),
            ("length0:logfreq0", 0.5),
            ("surprisal0", 2.0),
            ("surprisal1", 0.75),
            ("surprisal2", 0.0),
            ("length2", 0.0),
        ];
        for (name, v) in want {
            assert!((m.coefficient(name).unwrap() - v).abs() < 1e-8, "{name}");
        }
        assert!((m.raw_intercept() - 250.0).abs() < 1e-7);
    }

    #[test]
    fn constant_rt_gives_flat_model() {
        let data = rows_from(
            |i, p| {
                (
                    1.0 + pseudo(i, p, 1),
                    -pseudo(i, p, 2),
                    pseudo(i, p, 3),
                    321.0,
                )
            },
            30,
            10,
        );
        let m = fit_full(&data, &no_centering()).unwrap();
        assert!(m.raw_coefficients().iter().all(|b| b.abs() < 1e-9));
        assert!((m.raw_intercept() - 321.0).abs() < 1e-9);
    }

    #[test]
    fn zero_surprisal_reduces_to_baseline() {
        let data = rows_from(
            |i, p| {
                (
                    1.0 + pseudo(i, p, 1),
                    -pseudo(i, p, 2),
                    0.0,
                    200.0 + 10.0 * pseudo(i, p, 4),
                )
            },
            30,
            10,
        );
        let full = fit_full(&data, &FitOptions::default()).unwrap();
        let base = fit_baseline(&data, &FitOptions::default()).unwrap();
        assert!(delta_ll(&full, &base).unwrap().abs() < 1e-9);
        assert_eq!(full.coefficient("surprisal0"), Some(0.0));
    }

    #[test]
    fn collinear_predictors_are_rejected() {
        let data = rows_from(
            |i, p| {
                (
                    1.0 + pseudo(i, p, 1),
                    1.0 + pseudo(i, p, 1),
                    0.0,
                    300.0 + pseudo(i, p, 4),
                )
            },
            30,
            10,
        );
        assert!(matches!(
            fit_baseline(&data, &no_centering()),
            Err(RtError::RankDeficient { .. })
        ));
    }

    #[test]
    fn too_few_rows() {
        let data = rows_from(|i, p| (pseudo(i, p, 1), pseudo(i, p, 2), 0.0, 300.0), 2, 12);
        assert!(matches!(
            fit_full(&data, &FitOptions::default()),
            Err(RtError::InsufficientRows {
                rows: 20,
                needed: 130
            })
        ));
    }

    #[test]
    fn delta_ll_needs_the_same_rows() {
        let data = rows_from(
            |i, p| {
                (
                    1.0 + pseudo(i, p, 1),
                    -pseudo(i, p, 2),
                    pseudo(i, p, 3),
                    300.0 + pseudo(i, p, 4),
                )
            },
            30,
            10,
        );
        let full = fit_full(&data, &FitOptions::default()).unwrap();
        let base = fit_baseline(&data[10..], &FitOptions::default()).unwrap();
        assert!(matches!(delta_ll(&full, &base), Err(RtError::RowMismatch)));
    }

    #[test]
    fn prediction_at_the_mean_is_the_intercept() {
        let data = rows_from(
            |i, p| {
                (
                    1.0 + pseudo(i, p, 1),
                    -pseudo(i, p, 2),
                    pseudo(i, p, 3),
                    300.0 + pseudo(i, p, 4),
                )
            },
            30,
            10,
        );
        let m = fit_full(&data, &FitOptions::default()).unwrap();
        let z = vec![0.0; m.coefficients.len()];
        assert_eq!(m.predict_standardized(&z).unwrap(), m.intercept);
        assert!(m.predict_standardized(&z[1..]).is_err());
    }
}
