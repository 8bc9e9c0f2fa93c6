//! Raw per-window detectors for the twelve line-pattern properties.
//!
//! Every function here is a pure kernel over plain slices. Bivariate kernels
//! take aligned `x_rows` (primary axis) and `y_rows` (secondary axis) holding
//! the member rows of one window; marginal kernels look at `x_rows` only.
//! Normalization into `[0, 1]` scores happens in [`crate::scoring`].

mod kl;
mod moments;
mod pargnostics;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use kl::{
    clear_grouping, density_change, kde_density, neighborhood_probabilities, BANDWIDTH_FALLBACK,
    PROBABILITY_FLOOR,
};
pub use moments::{outliers, pearson, quantile, skewness, Pearson};
pub use pargnostics::{fan, parallelism, DEFAULT_FAN_BINS};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DetectorError {
    #[error("series lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("kernel bandwidth must be positive, got {0}")]
    ZeroBandwidth(f64),
    #[error("fan needs at least 2 bins, got {0}")]
    TooFewBins(usize),
}

pub(crate) fn check_aligned(xs: &[f64], ys: &[f64]) -> Result<(), DetectorError> {
    if xs.len() != ys.len() {
        return Err(DetectorError::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    Ok(())
}

/// Population standard deviation (divides by `n`).
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt()
}

/// Standard deviation used as KDE bandwidth / neighborhood scale, with the
/// fallback for zero-spread windows.
pub fn scale_or_fallback(xs: &[f64]) -> f64 {
    let s = std_dev(xs);
    if s > 0.0 && s.is_finite() {
        s
    } else {
        BANDWIDTH_FALLBACK
    }
}

/// The twelve properties.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PropertyId {
    #[serde(rename = "pos_corr")]
    PosCorrelation,
    #[serde(rename = "neg_corr")]
    NegCorrelation,
    #[serde(rename = "pos_var")]
    PosVariance,
    #[serde(rename = "neg_var")]
    NegVariance,
    #[serde(rename = "pos_skew")]
    PosSkewness,
    #[serde(rename = "neg_skew")]
    NegSkewness,
    #[serde(rename = "outliers")]
    Outliers,
    #[serde(rename = "density_change")]
    DensityChange,
    #[serde(rename = "clear_grouping")]
    ClearGrouping,
    #[serde(rename = "split_up")]
    SplitUp,
    #[serde(rename = "neighborhood")]
    Neighborhood,
    #[serde(rename = "fan")]
    Fan,
}

impl PropertyId {
    pub const COUNT: usize = 12;

    /// Canonical order; also the serialization order of every property map.
    pub const ALL: [PropertyId; 12] = [
        PropertyId::PosCorrelation,
        PropertyId::NegCorrelation,
        PropertyId::PosVariance,
        PropertyId::NegVariance,
        PropertyId::PosSkewness,
        PropertyId::NegSkewness,
        PropertyId::Outliers,
        PropertyId::DensityChange,
        PropertyId::ClearGrouping,
        PropertyId::SplitUp,
        PropertyId::Neighborhood,
        PropertyId::Fan,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Short key used in weight strings and JSON maps.
    pub fn key(self) -> &'static str {
        match self {
            PropertyId::PosCorrelation => "pos_corr",
            PropertyId::NegCorrelation => "neg_corr",
            PropertyId::PosVariance => "pos_var",
            PropertyId::NegVariance => "neg_var",
            PropertyId::PosSkewness => "pos_skew",
            PropertyId::NegSkewness => "neg_skew",
            PropertyId::Outliers => "outliers",
            PropertyId::DensityChange => "density_change",
            PropertyId::ClearGrouping => "clear_grouping",
            PropertyId::SplitUp => "split_up",
            PropertyId::Neighborhood => "neighborhood",
            PropertyId::Fan => "fan",
        }
    }

    /// Marginal properties depend on the primary axis alone.
    pub fn is_marginal(self) -> bool {
        matches!(
            self,
            PropertyId::PosSkewness | PropertyId::NegSkewness | PropertyId::Outliers
        )
    }
}

impl fmt::Display for PropertyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("unknown property `{0}`")]
pub struct UnknownProperty(pub String);

impl FromStr for PropertyId {
    type Err = UnknownProperty;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PropertyId::ALL
            .into_iter()
            .find(|p| p.key() == s)
            .ok_or_else(|| UnknownProperty(s.to_owned()))
    }
}

/// One raw detector output for one window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RawWindowValue {
    pub property: PropertyId,
    pub window_index: usize,
    /// `None` when the window is underpopulated.
    pub value: Option<f64>,
    pub n_points: usize,
}
