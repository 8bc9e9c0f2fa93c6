//! Maps raw detector outputs onto confidence-adjusted `[0, 1]` scores.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::beta::beta_reg;

use crate::detectors::skewness;

/// Largest |r| fed into the t statistic.
const R_CLAMP: f64 = 1.0 - 1e-12;

/// Two-sided p-value of a Pearson `r` over `n` points (Student t, `n - 2`
/// degrees of freedom). Returns 1 when `n < 3`.
pub fn correlation_p_value(r: f64, n: usize) -> f64 {
    if n < 3 || !r.is_finite() {
        return 1.0;
    }
    if r.abs() >= 1.0 {
        return 0.0;
    }
    let r = r.clamp(-R_CLAMP, R_CLAMP);
    let df = (n - 2) as f64;
    let t = r * df.sqrt() / (1.0 - r * r).sqrt();
    let x = df / (df + t * t);
    if x >= 1.0 {
        return 1.0;
    }
    beta_reg(df / 2.0, 0.5, x).clamp(0.0, 1.0)
}

/// Splits a signed magnitude in `[0, 1]` into `(positive, negative)` scores.
pub(crate) fn route(sign: f64, magnitude: f64) -> (f64, f64) {
    let m = magnitude.clamp(0.0, 1.0);
    if sign > 0.0 {
        (m, 0.0)
    } else if sign < 0.0 {
        (0.0, m)
    } else {
        (0.0, 0.0)
    }
}

/// `(pos, neg)` correlation scores: `|r| * (1 - p)` routed by sign.
pub fn normalize_correlation(r: f64, n: usize) -> (f64, f64) {
    let magnitude = if r.abs() >= 1.0 {
        1.0
    } else {
        r.abs() * (1.0 - correlation_p_value(r, n))
    };
    route(r, magnitude)
}

/// `(pos, neg)` variance scores from the covariance numerator.
///
/// On `[0, 1]` data the covariance `numerator / n` is bounded by `1/4`, so
/// `4 |numerator| / n` is already a `[0, 1]` magnitude; it is then discounted
/// by the same correlation p-value as the correlation properties.
pub fn normalize_variance(numerator: f64, r: f64, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 0.0);
    }
    let magnitude = (4.0 * numerator.abs() / n as f64).min(1.0);
    let p = if r.abs() >= 1.0 {
        0.0
    } else {
        correlation_p_value(r, n)
    };
    route(numerator, magnitude * (1.0 - p))
}

/// Sign-flip permutation test for skewness.
///
/// Each resample reflects every value about the sample mean with probability
/// one half. `p` is the fraction of resamples whose |skewness| reaches `|g|`,
/// and the score `min(|g|, 1) * (1 - p)` is routed by the sign of `g`.
pub fn normalize_skewness(g: f64, xs: &[f64], permutations: usize, seed: u64) -> (f64, f64) {
    if g == 0.0 || xs.is_empty() || permutations == 0 {
        return (0.0, 0.0);
    }
    let p = skewness_p_value(g, xs, permutations, seed);
    route(g, g.abs().min(1.0) * (1.0 - p))
}

/// The permutation p-value behind [`normalize_skewness`].
pub fn skewness_p_value(g: f64, xs: &[f64], permutations: usize, seed: u64) -> f64 {
    let n = xs.len();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let target = g.abs();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut buf = vec![0.0; n];
    let mut hits = 0usize;
    for _ in 0..permutations {
        let mut bits = 0u64;
        for (k, (b, &x)) in buf.iter_mut().zip(xs).enumerate() {
            if k % 64 == 0 {
                bits = rng.random();
            }
            *b = if bits & 1 == 1 { 2.0 * mean - x } else { x };
            bits >>= 1;
        }
        if skewness(&buf).abs() >= target {
            hits += 1;
        }
    }
    hits as f64 / permutations as f64
}

pub fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Pooled z-score statistics for the clear-grouping family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KlPool {
    pub mean: f64,
    /// Population standard deviation of the pooled sample.
    pub std_dev: f64,
}

impl KlPool {
    pub fn fit(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self {
                mean: 0.0,
                std_dev: 0.0,
            };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Self {
            mean,
            std_dev: var.sqrt(),
        }
    }

    pub fn is_degenerate(&self) -> bool {
        !(self.std_dev > 0.0 && self.std_dev.is_finite())
    }

    /// Clear-grouping score: low divergence maps to a high score.
    pub fn clear_grouping(&self, raw: f64) -> f64 {
        if self.is_degenerate() {
            return 0.5;
        }
        let z = (raw - self.mean) / self.std_dev;
        (1.0 - logistic(z)).clamp(0.0, 1.0)
    }
}

/// Clear-grouping scores for a pooled sample of raw divergences. Split-up is
/// `1 - score` for each entry.
pub fn normalize_kl_family(raw_values: &[f64]) -> Vec<f64> {
    let pool = KlPool::fit(raw_values);
    raw_values.iter().map(|&v| pool.clear_grouping(v)).collect()
}

/// Pooled min-max scaling. A degenerate pool maps everything to 0 when the
/// common value is 0 (nothing detected anywhere) and to 0.5 otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinMax {
    pub min: f64,
    pub max: f64,
}

impl MinMax {
    pub fn fit(values: impl IntoIterator<Item = f64>) -> Self {
        let (min, max) = values
            .into_iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            });
        Self { min, max }
    }

    pub fn apply(&self, v: f64) -> f64 {
        if self.max > self.min {
            ((v - self.min) / (self.max - self.min)).clamp(0.0, 1.0)
        } else if v == 0.0 || !self.max.is_finite() {
            0.0
        } else {
            0.5
        }
    }
}

/// Scales a Pargnostics-style score down for windows holding fewer rows than
/// a uniform spread would put there.
pub fn scale_pargnostics(value: f64, n_window: usize, n_total: usize, window_fraction: f64) -> f64 {
    if n_total == 0 {
        return 0.0;
    }
    let expected = n_total as f64 * window_fraction;
    let factor = if expected > 0.0 {
        (n_window as f64 / expected).min(1.0)
    } else {
        1.0
    };
    (value * factor).clamp(0.0, 1.0)
}
