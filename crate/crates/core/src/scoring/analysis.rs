//! Two-phase scoring engine.
//!
//! Phase one runs every detector on every window of every ordered axis pair
//! and stores the raw values. Phase two fits the dataset-wide pools (outlier
//! counts, density change, clear grouping) and normalizes each window.
//! Pools are fitted only after all raw values exist, so results never depend
//! on evaluation order.

use serde::{Deserialize, Serialize};

use super::normalize::{
    normalize_correlation, normalize_skewness, normalize_variance, scale_pargnostics, KlPool,
    MinMax,
};
use super::{AnalysisConfig, PropertyMap, PropertyScores, ScoringError, Weights};
use crate::data::Dataset;
use crate::detectors::{
    clear_grouping, density_change, fan, outliers, parallelism, pearson, skewness, PropertyId,
    RawWindowValue,
};
use crate::exec::Execution;
use crate::windows::{make_windows, Window};

/// Raw marginal detector values for one window of one axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MarginalRaw {
    pub n_points: usize,
    pub skewness: f64,
    pub outliers: usize,
    /// Permutation-tested `(pos, neg)` skewness scores.
    pub skew_scores: (f64, f64),
}

/// Raw bivariate detector values for one window of one ordered pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairRaw {
    pub n_points: usize,
    pub r: f64,
    pub covariance_numerator: f64,
    pub density_change: f64,
    pub clear_grouping: f64,
    pub parallelism: f64,
    pub fan: f64,
}

/// Per-window normalized scores for one ordered pair; the data behind an
/// area chart on the primary axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowProfile {
    /// `(primary, secondary)` axis indices.
    pub pair: (usize, usize),
    pub window_bounds: Vec<(f64, f64)>,
    pub n_points: Vec<usize>,
    /// One entry per window; `None` for underpopulated windows.
    pub per_property: PropertyMap<Vec<Option<f64>>>,
}

impl WindowProfile {
    pub fn window_count(&self) -> usize {
        self.window_bounds.len()
    }

    pub fn series(&self, p: PropertyId) -> &[Option<f64>] {
        self.per_property.get(p)
    }

    /// Mean over scored windows per property, 0 where no window is scored.
    pub fn mean_scores(&self) -> PropertyScores {
        PropertyMap::from_fn(|k| {
            let (sum, count) = self.per_property.0[k]
                .iter()
                .flatten()
                .fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
            if count == 0 {
                0.0
            } else {
                (sum / count as f64).clamp(0.0, 1.0)
            }
        })
    }
}

/// Directed `D x D` heatmap of weighted property scores. The diagonal, and any
/// masked-out cell, is `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreMatrix {
    pub dims: Vec<String>,
    pub cells: Vec<Vec<Option<f64>>>,
    pub breakdown: Vec<Vec<Option<PropertyScores>>>,
}

impl ScoreMatrix {
    /// Matrix with the given cells and an all-zero breakdown; the diagonal
    /// is cleared. Used for orderings over externally supplied scores.
    pub fn from_dense(dims: Vec<String>, cells: Vec<Vec<f64>>) -> Self {
        let d = cells.len();
        let cells: Vec<Vec<Option<f64>>> = cells
            .into_iter()
            .enumerate()
            .map(|(i, row)| {
                row.into_iter()
                    .enumerate()
                    .map(|(j, v)| (i != j).then_some(v))
                    .collect()
            })
            .collect();
        let breakdown = (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| (i != j).then(PropertyScores::default))
                    .collect()
            })
            .collect();
        Self {
            dims,
            cells,
            breakdown,
        }
    }

    pub fn size(&self) -> usize {
        self.cells.len()
    }

    pub fn cell(&self, i: usize, j: usize) -> Option<f64> {
        self.cells.get(i)?.get(j).copied().flatten()
    }

    pub fn breakdown_at(&self, i: usize, j: usize) -> Option<&PropertyScores> {
        self.breakdown.get(i)?.get(j)?.as_ref()
    }

    /// Copy keeping only the cells `keep(i, j)` accepts.
    pub fn masked(&self, keep: impl Fn(usize, usize) -> bool) -> Self {
        let d = self.size();
        let mut out = self.clone();
        for i in 0..d {
            for j in 0..d {
                if !keep(i, j) {
                    out.cells[i][j] = None;
                    out.breakdown[i][j] = None;
                }
            }
        }
        out
    }

    /// Number of non-null cells.
    pub fn active_cells(&self) -> usize {
        self.cells.iter().flatten().filter(|c| c.is_some()).count()
    }
}

/// Derives an independent RNG seed for one `(axis, window)` task so resampling
/// does not depend on scheduling.
pub fn pair_seed(seed: u64, axis: usize, window: usize) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    mix(mix(mix(seed) ^ axis as u64) ^ window as u64)
}

/// Normalized scores for every ordered pair of a dataset under one
/// [`AnalysisConfig`]. Independent of weights, so one analysis serves any
/// number of matrices.
#[derive(Debug, Clone)]
pub struct Analysis {
    config: AnalysisConfig,
    dims: Vec<String>,
    row_count: usize,
    windows: Vec<Vec<Window>>,
    marginals: Vec<Vec<Option<MarginalRaw>>>,
    pair_raw: Vec<Vec<Option<PairRaw>>>,
    profiles: Vec<Option<WindowProfile>>,
    pair_means: Vec<Option<PropertyScores>>,
}

impl Analysis {
    pub fn compute(
        dataset: &Dataset,
        config: &AnalysisConfig,
        exec: Execution,
    ) -> Result<Self, ScoringError> {
        config.validate()?;
        let d = dataset.dims();
        if d < 2 {
            return Err(ScoringError::TooFewAxes(d));
        }
        let spec = config.spec;
        let windows: Vec<Vec<Window>> =
            exec.map_range(d, |i| make_windows(dataset.column(i).normalized(), &spec));
        let wcount = windows[0].len();

        // phase one: raw values
        let marginals_flat = exec.map_range(d * wcount, |t| {
            let (axis, w) = (t / wcount, t % wcount);
            let win = &windows[axis][w];
            if !win.is_populated() {
                return None;
            }
            let col = dataset.column(axis).normalized();
            let xs: Vec<f64> = win.member_rows.iter().map(|&r| col[r]).collect();
            let g = skewness(&xs);
            Some(MarginalRaw {
                n_points: xs.len(),
                skewness: g,
                outliers: outliers(&xs),
                skew_scores: normalize_skewness(
                    g,
                    &xs,
                    config.permutations,
                    pair_seed(config.seed, axis, w),
                ),
            })
        });
        let marginals: Vec<Vec<Option<MarginalRaw>>> =
            marginals_flat.chunks(wcount).map(<[_]>::to_vec).collect();

        let pair_flat = exec.map_range(d * d * wcount, |t| {
            let (pair, w) = (t / wcount, t % wcount);
            let (i, j) = (pair / d, pair % d);
            if i == j {
                return None;
            }
            let win = &windows[i][w];
            if !win.is_populated() {
                return None;
            }
            let (cx, cy) = (
                dataset.column(i).normalized(),
                dataset.column(j).normalized(),
            );
            let xs: Vec<f64> = win.member_rows.iter().map(|&r| cx[r]).collect();
            let ys: Vec<f64> = win.member_rows.iter().map(|&r| cy[r]).collect();
            Some(raw_pair(&xs, &ys, config.fan_bins))
        });
        let pair_raw: Vec<Vec<Option<PairRaw>>> =
            pair_flat.chunks(wcount).map(<[_]>::to_vec).collect();

        // phase two: pools, then per-window normalization
        let outlier_pool = MinMax::fit(
            marginals
                .iter()
                .flatten()
                .flatten()
                .map(|m| m.outliers as f64),
        );
        let density_pool = MinMax::fit(
            pair_raw
                .iter()
                .flatten()
                .flatten()
                .map(|p| p.density_change),
        );
        let grouping: Vec<f64> = pair_raw
            .iter()
            .flatten()
            .flatten()
            .map(|p| p.clear_grouping)
            .collect();
        let grouping_pool = KlPool::fit(&grouping);
        let pools = Pools {
            outliers: outlier_pool,
            density: density_pool,
            grouping: grouping_pool,
            n_total: dataset.row_count(),
            window_fraction: spec.window_fraction(),
        };

        let profiles: Vec<Option<WindowProfile>> = exec.map_range(d * d, |pair| {
            let (i, j) = (pair / d, pair % d);
            (i != j).then(|| pools.profile((i, j), &windows[i], &marginals[i], &pair_raw[pair]))
        });
        let pair_means = profiles
            .iter()
            .map(|p| p.as_ref().map(WindowProfile::mean_scores))
            .collect();

        Ok(Self {
            config: *config,
            dims: dataset.names(),
            row_count: dataset.row_count(),
            windows,
            marginals,
            pair_raw,
            profiles,
            pair_means,
        })
    }

    pub fn config(&self) -> &AnalysisConfig {
        &self.config
    }

    pub fn dims(&self) -> &[String] {
        &self.dims
    }

    pub fn size(&self) -> usize {
        self.dims.len()
    }

    pub fn row_count(&self) -> usize {
        self.row_count
    }

    /// Windows along axis `axis` (shared by every pair with that primary).
    pub fn windows(&self, axis: usize) -> Option<&[Window]> {
        self.windows.get(axis).map(Vec::as_slice)
    }

    fn pair_index(&self, i: usize, j: usize) -> Result<usize, ScoringError> {
        let d = self.size();
        if i >= d || j >= d || i == j {
            return Err(ScoringError::InvalidPair(i, j));
        }
        Ok(i * d + j)
    }

    pub fn profile(&self, i: usize, j: usize) -> Result<&WindowProfile, ScoringError> {
        let k = self.pair_index(i, j)?;
        Ok(self.profiles[k].as_ref().expect("off-diagonal profile"))
    }

    /// Every off-diagonal profile in row-major pair order.
    pub fn profiles(&self) -> impl Iterator<Item = &WindowProfile> {
        self.profiles.iter().flatten()
    }

    /// Window-averaged scores for one pair (a matrix breakdown cell).
    pub fn pair_scores(&self, i: usize, j: usize) -> Result<&PropertyScores, ScoringError> {
        let k = self.pair_index(i, j)?;
        Ok(self.pair_means[k].as_ref().expect("off-diagonal scores"))
    }

    pub fn marginal_raw(&self, axis: usize) -> Option<&[Option<MarginalRaw>]> {
        self.marginals.get(axis).map(Vec::as_slice)
    }

    pub fn pair_raw(&self, i: usize, j: usize) -> Result<&[Option<PairRaw>], ScoringError> {
        let k = self.pair_index(i, j)?;
        Ok(&self.pair_raw[k])
    }

    /// Raw detector values of one pair in the flat per-property form.
    pub fn raw_values(&self, i: usize, j: usize) -> Result<Vec<RawWindowValue>, ScoringError> {
        let pair = self.pair_raw(i, j)?;
        let marg = &self.marginals[i];
        let mut out = Vec::with_capacity(pair.len() * PropertyId::COUNT);
        for (w, (p, m)) in pair.iter().zip(marg).enumerate() {
            let n_points = self.windows[i][w].len();
            for prop in PropertyId::ALL {
                let value = match (p, m) {
                    (Some(p), Some(m)) => Some(match prop {
                        PropertyId::PosCorrelation | PropertyId::NegCorrelation => p.r,
                        PropertyId::PosVariance | PropertyId::NegVariance => p.covariance_numerator,
                        PropertyId::PosSkewness | PropertyId::NegSkewness => m.skewness,
                        PropertyId::Outliers => m.outliers as f64,
                        PropertyId::DensityChange => p.density_change,
                        PropertyId::ClearGrouping | PropertyId::SplitUp => p.clear_grouping,
                        PropertyId::Neighborhood => p.parallelism,
                        PropertyId::Fan => p.fan,
                    }),
                    _ => None,
                };
                out.push(RawWindowValue {
                    property: prop,
                    window_index: w,
                    value,
                    n_points,
                });
            }
        }
        Ok(out)
    }

    /// Weighted score matrix. Cheap: only averages cached scores.
    pub fn matrix(&self, weights: &Weights) -> Result<ScoreMatrix, ScoringError> {
        weights.require_active()?;
        let d = self.size();
        let total = weights.total();
        let mut cells = vec![vec![None; d]; d];
        let mut breakdown = vec![vec![None; d]; d];
        for i in 0..d {
            for j in 0..d {
                if i == j {
                    continue;
                }
                let scores = self.pair_means[i * d + j]
                    .clone()
                    .expect("off-diagonal scores");
                let weighted: f64 = weights.iter().map(|(p, w)| w * scores.get(p)).sum();
                cells[i][j] = Some((weighted / total).clamp(0.0, 1.0));
                breakdown[i][j] = Some(scores);
            }
        }
        Ok(ScoreMatrix {
            dims: self.dims.clone(),
            cells,
            breakdown,
        })
    }

    /// Rough heap footprint, for cache budgeting.
    pub fn approx_bytes(&self) -> usize {
        let rows: usize = self
            .windows
            .iter()
            .flatten()
            .map(|w| w.member_rows.len() * std::mem::size_of::<usize>() + 48)
            .sum();
        let wcount = self.windows.first().map_or(0, Vec::len);
        let per_profile = wcount * (PropertyId::COUNT * 16 + 24 + std::mem::size_of::<PairRaw>());
        rows + self.profiles.len() * (per_profile + PropertyId::COUNT * 8)
    }
}

fn raw_pair(xs: &[f64], ys: &[f64], fan_bins: usize) -> PairRaw {
    // lengths agree by construction and fan_bins was validated
    let p = pearson(xs, ys).expect("aligned");
    PairRaw {
        n_points: xs.len(),
        r: p.r,
        covariance_numerator: p.covariance_numerator,
        density_change: density_change(xs, ys).expect("aligned"),
        clear_grouping: clear_grouping(xs, ys).expect("aligned"),
        parallelism: parallelism(xs, ys).expect("aligned"),
        fan: fan(xs, ys, fan_bins).expect("validated bins"),
    }
}

struct Pools {
    outliers: MinMax,
    density: MinMax,
    grouping: KlPool,
    n_total: usize,
    window_fraction: f64,
}

impl Pools {
    fn window_scores(&self, p: &PairRaw, m: &MarginalRaw) -> [f64; PropertyId::COUNT] {
        let n = p.n_points;
        let (pos_corr, neg_corr) = normalize_correlation(p.r, n);
        let (pos_var, neg_var) = normalize_variance(p.covariance_numerator, p.r, n);
        let (pos_skew, neg_skew) = m.skew_scores;
        let clear = self.grouping.clear_grouping(p.clear_grouping);
        [
            pos_corr,
            neg_corr,
            pos_var,
            neg_var,
            pos_skew,
            neg_skew,
            self.outliers.apply(m.outliers as f64),
            self.density.apply(p.density_change),
            clear,
            1.0 - clear,
            scale_pargnostics(p.parallelism, n, self.n_total, self.window_fraction),
            scale_pargnostics(p.fan, n, self.n_total, self.window_fraction),
        ]
    }

    fn profile(
        &self,
        pair: (usize, usize),
        windows: &[Window],
        marginals: &[Option<MarginalRaw>],
        raws: &[Option<PairRaw>],
    ) -> WindowProfile {
        let mut per_property: PropertyMap<Vec<Option<f64>>> =
            PropertyMap::from_fn(|_| Vec::with_capacity(windows.len()));
        for (raw, marg) in raws.iter().zip(marginals) {
            let scores = match (raw, marg) {
                (Some(p), Some(m)) => Some(self.window_scores(p, m)),
                _ => None,
            };
            for (k, series) in per_property.0.iter_mut().enumerate() {
                series.push(scores.map(|s| s[k]));
            }
        }
        WindowProfile {
            pair,
            window_bounds: windows.iter().map(|w| (w.lo, w.hi)).collect(),
            n_points: windows.iter().map(Window::len).collect(),
            per_property,
        }
    }
}

/// Profile for one ordered pair. Runs the full analysis, since normalization
/// pools span the whole dataset.
pub fn build_profile(
    dataset: &Dataset,
    pair: (usize, usize),
    config: &AnalysisConfig,
) -> Result<WindowProfile, ScoringError> {
    let (i, j) = pair;
    if i == j || i >= dataset.dims() || j >= dataset.dims() {
        return Err(ScoringError::InvalidPair(i, j));
    }
    let analysis = Analysis::compute(dataset, config, Execution::default())?;
    analysis.profile(i, j).cloned()
}

pub fn build_matrix(
    dataset: &Dataset,
    weights: &Weights,
    config: &AnalysisConfig,
) -> Result<ScoreMatrix, ScoringError> {
    weights.require_active()?;
    Analysis::compute(dataset, config, Execution::default())?.matrix(weights)
}
