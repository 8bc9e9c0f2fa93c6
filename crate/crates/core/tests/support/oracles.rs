//! Brute-force reference implementations. Deliberately naive and written
//! straight from the defining formulas; they share no code with the library.

use std::f64::consts::PI;

pub fn mean(xs: &[f64]) -> f64 {
    let mut s = 0.0;
    for x in xs {
        s += x;
    }
    s / xs.len() as f64
}

pub fn pop_std(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let mut s = 0.0;
    for x in xs {
        s += (x - m).powi(2);
    }
    (s / xs.len() as f64).sqrt()
}

pub fn scale(xs: &[f64]) -> f64 {
    let s = pop_std(xs);
    if s > 0.0 {
        s
    } else {
        1e-3
    }
}

/// `(r, numerator)` from two explicit passes.
pub fn pearson(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let (mx, my) = (mean(xs), mean(ys));
    let mut num = 0.0;
    let mut dx2 = 0.0;
    let mut dy2 = 0.0;
    for i in 0..xs.len() {
        num += (xs[i] - mx) * (ys[i] - my);
        dx2 += (xs[i] - mx).powi(2);
        dy2 += (ys[i] - my).powi(2);
    }
    if dx2 == 0.0 || dy2 == 0.0 {
        return (0.0, 0.0);
    }
    (num / (dx2.sqrt() * dy2.sqrt()), num)
}

pub fn skewness(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let n = xs.len() as f64;
    let m2: f64 = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    let m3: f64 = xs.iter().map(|x| (x - m).powi(3)).sum::<f64>() / n;
    if m2 == 0.0 {
        0.0
    } else {
        m3 / m2.powf(1.5)
    }
}

/// Quartile at rank q(n-1) by explicit interpolation.
fn quartile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() as f64 - 1.0);
    let below = pos.floor();
    let w = pos - below;
    let b = below as usize;
    if b + 1 < sorted.len() {
        sorted[b] * (1.0 - w) + sorted[b + 1] * w
    } else {
        sorted[b]
    }
}

pub fn outliers(xs: &[f64]) -> usize {
    let mut s = xs.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let q1 = quartile(&s, 0.25);
    let q3 = quartile(&s, 0.75);
    let iqr = q3 - q1;
    let mut count = 0;
    for &x in xs {
        if x < q1 - 1.5 * iqr || x > q3 + 1.5 * iqr {
            count += 1;
        }
    }
    count
}

/// Naive O(N^2) Gaussian kernel sum, renormalized over the eval points.
pub fn kde(points: &[f64], eval_at: &[f64], h: f64) -> Vec<f64> {
    let n = points.len() as f64;
    let mut out = Vec::new();
    for &e in eval_at {
        let mut s = 0.0;
        for &p in points {
            s += (-(e - p).powi(2) / (2.0 * h * h)).exp() / (n * h * (2.0 * PI).sqrt());
        }
        out.push(s);
    }
    let total: f64 = out.iter().sum();
    out.iter().map(|v| v / total).collect()
}

pub fn density_change(xs: &[f64], ys: &[f64]) -> f64 {
    let p = kde(xs, xs, scale(xs));
    let q = kde(ys, ys, scale(ys));
    let mut kl = 0.0;
    for i in 0..p.len() {
        if p[i] > 0.0 {
            kl += p[i] * (p[i] / q[i].max(1e-12)).ln();
        }
    }
    kl.max(0.0)
}

/// Direct evaluation of the neighbour probability formula.
pub fn neighbors(points: &[f64], sigma: f64) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut m = vec![vec![0.0; n]; n];
    for a in 0..n {
        let mut denom = 0.0;
        for k in 0..n {
            if k != a {
                denom += (-(points[a] - points[k]).powi(2) / (sigma * sigma)).exp();
            }
        }
        for b in 0..n {
            if b != a {
                m[a][b] = (-(points[a] - points[b]).powi(2) / (sigma * sigma)).exp() / denom;
            }
        }
    }
    m
}

/// Four-loop clear-grouping sum: neighbour matrices by explicit loops, then
/// the double KL sum.
pub fn clear_grouping(xs: &[f64], ys: &[f64]) -> f64 {
    let px = neighbors(xs, scale(xs));
    let py = neighbors(ys, scale(ys));
    let n = xs.len();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j && px[i][j] > 0.0 {
                total += px[i][j] * (px[i][j] / py[i][j].max(1e-12)).ln();
            }
        }
    }
    total.max(0.0)
}

pub fn parallelism(xs: &[f64], ys: &[f64]) -> f64 {
    let angles: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| (y - x).atan()).collect();
    let mut lo = angles[0];
    let mut hi = angles[0];
    for &a in &angles {
        if a < lo {
            lo = a;
        }
        if a > hi {
            hi = a;
        }
    }
    1.0 - (hi - lo) / (PI / 2.0)
}

pub fn fan(ys: &[f64], bins: usize) -> f64 {
    let mut hist = vec![0usize; bins];
    for &y in ys {
        let mut b = (y * bins as f64) as usize;
        if b >= bins {
            b = bins - 1;
        }
        hist[b] += 1;
    }
    hist.iter().filter(|&&c| c > 0).count() as f64 / bins as f64
}

/// ln Gamma by Stirling series with upward shifting; plenty for the t density.
fn ln_gamma(mut x: f64) -> f64 {
    let mut shift = 0.0;
    while x < 10.0 {
        shift -= x.ln();
        x += 1.0;
    }
    let x2 = x * x;
    shift + (x - 0.5) * x.ln() - x + 0.5 * (2.0 * PI).ln() + 1.0 / (12.0 * x)
        - 1.0 / (360.0 * x * x2)
        + 1.0 / (1260.0 * x2 * x2 * x)
}

/// Two-sided Student-t p-value by composite Simpson integration of the density
/// from |t| outwards under the substitution t = |t| / u.
pub fn t_two_sided_p(t: f64, df: f64) -> f64 {
    let c = (ln_gamma((df + 1.0) / 2.0) - ln_gamma(df / 2.0)).exp() / (df * PI).sqrt();
    let density = |s: f64| c * (1.0 + s * s / df).powf(-(df + 1.0) / 2.0);
    let a = t.abs();
    // integral_{a}^{inf} f(s) ds = integral_0^1 f(a/u) a/u^2 du  (a > 0)
    let g = |u: f64| {
        if u <= 0.0 {
            0.0
        } else {
            density(a / u) * a / (u * u)
        }
    };
    let n = 200_000;
    let h = 1.0 / n as f64;
    let mut s = g(0.0) + g(1.0);
    for k in 1..n {
        let u = k as f64 * h;
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * g(u);
    }
    2.0 * s * h / 3.0
}

/// Best open-path total over all permutations (Heap's algorithm).
pub fn brute_force_path(w: &[Vec<f64>]) -> f64 {
    let d = w.len();
    let mut perm: Vec<usize> = (0..d).collect();
    let score = |p: &[usize]| -> f64 { p.windows(2).map(|e| w[e[0]][e[1]]).sum() };
    let mut best = score(&perm);
    let mut c = vec![0usize; d];
    let mut i = 0;
    while i < d {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            best = best.max(score(&perm));
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    best
}

/// Greedy continuation from a fixed prefix: pick the unused axis with the
/// highest score from the tail, lowest index on ties.
pub fn greedy_extend(w: &[Vec<f64>], prefix: &[usize]) -> Vec<usize> {
    let d = w.len();
    let mut order = prefix.to_vec();
    while order.len() < d {
        let tail = *order.last().unwrap();
        let mut best: Option<usize> = None;
        for j in 0..d {
            if order.contains(&j) {
                continue;
            }
            match best {
                Some(b) if w[tail][b] >= w[tail][j] => {}
                _ => best = Some(j),
            }
        }
        order.push(best.unwrap());
    }
    order
}
