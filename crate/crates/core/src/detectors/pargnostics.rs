//! Line-geometry measures: parallelism (neighborhood) and divergence (fan).

use std::f64::consts::FRAC_PI_2;

use super::{check_aligned, DetectorError};

pub const DEFAULT_FAN_BINS: usize = 20;

/// `1 - extent(angles) / (pi/2)` with unit axis spacing, so the slope of each
/// line is `y - x` and its angle `atan(y - x)`. One means all lines parallel.
pub fn parallelism(x_rows: &[f64], y_rows: &[f64]) -> Result<f64, DetectorError> {
    check_aligned(x_rows, y_rows)?;
    if x_rows.is_empty() {
        return Ok(1.0);
    }
    let (lo, hi) = x_rows
        .iter()
        .zip(y_rows)
        .map(|(x, y)| (y - x).atan())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), a| {
            (lo.min(a), hi.max(a))
        });
    Ok((1.0 - (hi - lo) / FRAC_PI_2).clamp(0.0, 1.0))
}

/// Bin of a `[0, 1]` value among `bins` equal bins; 1.0 lands in the last.
pub(crate) fn bin_of(y: f64, bins: usize) -> usize {
    ((y * bins as f64).floor() as usize).min(bins - 1)
}

/// Fraction of secondary-axis bins hit by the window's lines.
pub fn fan(x_rows: &[f64], y_rows: &[f64], bins: usize) -> Result<f64, DetectorError> {
    check_aligned(x_rows, y_rows)?;
    if bins < 2 {
        return Err(DetectorError::TooFewBins(bins));
    }
    let mut hit = vec![false; bins];
    for &y in y_rows {
        hit[bin_of(y.clamp(0.0, 1.0), bins)] = true;
    }
    Ok(hit.iter().filter(|&&h| h).count() as f64 / bins as f64)
}
