use super::{check_aligned, DetectorError};

/// Pearson correlation plus its unnormalized covariance numerator, which is
/// what the variance properties report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pearson {
    pub r: f64,
    pub covariance_numerator: f64,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn all_equal(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[0] == w[1])
}

/// Both outputs are zero when either series is constant.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<Pearson, DetectorError> {
    check_aligned(xs, ys)?;
    if xs.is_empty() || all_equal(xs) || all_equal(ys) {
        return Ok(Pearson {
            r: 0.0,
            covariance_numerator: 0.0,
        });
    }
    let (mx, my) = (mean(xs), mean(ys));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    let denom = sxx.sqrt() * syy.sqrt();
    let r = if denom > 0.0 {
        (sxy / denom).clamp(-1.0, 1.0)
    } else {
        0.0
    };
    Ok(Pearson {
        r,
        covariance_numerator: sxy,
    })
}

/// Fisher-Pearson skewness `m3 / m2^1.5` with population moments.
/// Zero for constant (or empty) input.
pub fn skewness(xs: &[f64]) -> f64 {
    if xs.is_empty() || all_equal(xs) {
        return 0.0;
    }
    let n = xs.len() as f64;
    let m = mean(xs);
    let (mut m2, mut m3) = (0.0, 0.0);
    for &x in xs {
        let d = x - m;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
    }
    m2 /= n;
    m3 /= n;
    if m2 > 0.0 {
        m3 / m2.powf(1.5)
    } else {
        0.0
    }
}

/// Quantile of an ascending slice at rank `q * (n - 1)`, interpolating
/// linearly between neighbouring order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let rank = q * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Number of points outside the Tukey fences `[Q1 - 1.5 IQR, Q3 + 1.5 IQR]`.
pub fn outliers(xs: &[f64]) -> usize {
    if xs.is_empty() {
        return 0;
    }
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q1 = quantile(&sorted, 0.25);
    let q3 = quantile(&sorted, 0.75);
    let iqr = q3 - q1;
    let (lo, hi) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    xs.iter().filter(|&&x| x < lo || x > hi).count()
}
