//! KL-divergence family: density change and clear grouping.

use std::f64::consts::PI;

use super::{check_aligned, scale_or_fallback, DetectorError};

/// Bandwidth / neighbourhood scale substituted for zero-spread windows.
pub const BANDWIDTH_FALLBACK: f64 = 1e-3;

/// Lower bound applied to the reference distribution inside every KL log.
pub const PROBABILITY_FLOOR: f64 = 1e-12;

/// Gaussian KDE of `points`, evaluated at `eval_at` and renormalized into a
/// probability vector over the evaluation points.
pub fn kde_density(points: &[f64], eval_at: &[f64], h: f64) -> Result<Vec<f64>, DetectorError> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(DetectorError::ZeroBandwidth(h));
    }
    if points.is_empty() || eval_at.is_empty() {
        return Ok(vec![0.0; eval_at.len()]);
    }
    let inv = 1.0 / (2.0 * h * h);
    let scale = 1.0 / (points.len() as f64 * h * (2.0 * PI).sqrt());
    let mut dens: Vec<f64> = eval_at
        .iter()
        .map(|&e| {
            let s: f64 = points
                .iter()
                .map(|&p| {
                    let d = e - p;
                    (-d * d * inv).exp()
                })
                .sum();
            s * scale
        })
        .collect();
    if dens.iter().any(|&d| !(d > 0.0 && d.is_finite())) {
        dens = log_space_kde(points, eval_at, inv);
    }
    let total: f64 = dens.iter().sum();
    for d in &mut dens {
        *d /= total;
    }
    Ok(dens)
}

// Unnormalized densities rescaled so the largest is 1; used when the direct
// sum underflows for eval points far from every sample.
fn log_space_kde(points: &[f64], eval_at: &[f64], inv: f64) -> Vec<f64> {
    let logs: Vec<f64> = eval_at
        .iter()
        .map(|&e| {
            let exps: Vec<f64> = points.iter().map(|&p| -(e - p) * (e - p) * inv).collect();
            let m = exps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            m + exps.iter().map(|&t| (t - m).exp()).sum::<f64>().ln()
        })
        .collect();
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    logs.iter().map(|&l| (l - top).exp()).collect()
}

/// `D_KL(X || Y)` between the KDE probability vectors of the two axes, each
/// evaluated at its own window points with its own standard deviation as
/// bandwidth.
pub fn density_change(x_rows: &[f64], y_rows: &[f64]) -> Result<f64, DetectorError> {
    check_aligned(x_rows, y_rows)?;
    if x_rows.is_empty() {
        return Ok(0.0);
    }
    let p = kde_density(x_rows, x_rows, scale_or_fallback(x_rows))?;
    let q = kde_density(y_rows, y_rows, scale_or_fallback(y_rows))?;
    let kl: f64 = p
        .iter()
        .zip(&q)
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(&pi, &qi)| pi * (pi / qi.max(PROBABILITY_FLOOR)).ln())
        .sum();
    Ok(kl.max(0.0))
}

/// Fills `out` with the neighbour distribution of point `i`.
/// Exponents are shifted by the nearest-neighbour distance so the row never
/// underflows to all zeros; the shift cancels in the normalization.
/// Returns `ln` of the shifted normalizer and the shift itself so callers can
/// recover exact log-probabilities.
fn neighbor_row(points: &[f64], i: usize, inv_sigma2: f64, out: &mut [f64]) -> (f64, f64) {
    let xi = points[i];
    let mut dmin = f64::INFINITY;
    for (j, &xj) in points.iter().enumerate() {
        if j != i {
            let d = (xi - xj) * (xi - xj) * inv_sigma2;
            out[j] = d;
            dmin = dmin.min(d);
        }
    }
    let mut total = 0.0;
    for (j, o) in out.iter_mut().enumerate() {
        if j == i {
            *o = 0.0;
        } else {
            *o = (-(*o - dmin)).exp();
            total += *o;
        }
    }
    for o in out.iter_mut() {
        *o /= total;
    }
    (total.ln(), dmin)
}

/// Row-stochastic matrix `m[i][j] = p(x_j | x_i)` with a zero diagonal.
/// A non-positive `sigma` is replaced by [`BANDWIDTH_FALLBACK`].
pub fn neighborhood_probabilities(points: &[f64], sigma: f64) -> Vec<Vec<f64>> {
    let sigma = if sigma > 0.0 && sigma.is_finite() {
        sigma
    } else {
        BANDWIDTH_FALLBACK
    };
    let n = points.len();
    let inv = 1.0 / (sigma * sigma);
    (0..n)
        .map(|i| {
            let mut row = vec![0.0; n];
            if n > 1 {
                neighbor_row(points, i, inv, &mut row);
            }
            row
        })
        .collect()
}

/// Sum over all points of the KL divergence between each point's neighbour
/// distribution on the primary axis and on the secondary axis. Low values
/// mean neighbourhoods survive the transition (clear grouping).
pub fn clear_grouping(x_rows: &[f64], y_rows: &[f64]) -> Result<f64, DetectorError> {
    check_aligned(x_rows, y_rows)?;
    let n = x_rows.len();
    if n < 2 {
        return Ok(0.0);
    }
    let sx = scale_or_fallback(x_rows);
    let sy = scale_or_fallback(y_rows);
    let (inv_x, inv_y) = (1.0 / (sx * sx), 1.0 / (sy * sy));
    let log_floor = PROBABILITY_FLOOR.ln();

    let mut px = vec![0.0; n];
    let mut py = vec![0.0; n];
    let mut total = 0.0;
    for i in 0..n {
        let (ln_zx, dmin_x) = neighbor_row(x_rows, i, inv_x, &mut px);
        let (ln_zy, dmin_y) = neighbor_row(y_rows, i, inv_y, &mut py);
        let (xi, yi) = (x_rows[i], y_rows[i]);
        let mut row = 0.0;
        for j in 0..n {
            if j == i || px[j] <= 0.0 {
                continue;
            }
            let dx = (xi - x_rows[j]) * (xi - x_rows[j]) * inv_x;
            let dy = (yi - y_rows[j]) * (yi - y_rows[j]) * inv_y;
            let ln_px = -(dx - dmin_x) - ln_zx;
            let ln_py = (-(dy - dmin_y) - ln_zy).max(log_floor);
            row += px[j] * (ln_px - ln_py);
        }
        total += row;
    }
    Ok(total.max(0.0))
}
