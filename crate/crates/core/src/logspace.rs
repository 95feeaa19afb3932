//! Log-space arithmetic helpers.

use std::f64::consts::LN_2;

/// Stable `ln(sum(exp(x)))`; `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let xs: Vec<f64> = xs.into_iter().collect();
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Converts a natural-log probability to surprisal in bits.
pub fn nats_to_bits(logp: f64) -> f64 {
    -logp / LN_2
}
