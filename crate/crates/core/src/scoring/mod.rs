//! Confidence-adjusted property scores, window profiles and the directed
//! score matrix.

mod analysis;
mod normalize;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::de::Error as _;
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::detectors::{PropertyId, DEFAULT_FAN_BINS};
use crate::windows::{WindowSpec, WindowSpecError};

pub use analysis::{
    build_matrix, build_profile, pair_seed, Analysis, MarginalRaw, PairRaw, ScoreMatrix,
    WindowProfile,
};
pub use normalize::{
    correlation_p_value, logistic, normalize_correlation, normalize_kl_family, normalize_skewness,
    normalize_variance, scale_pargnostics, skewness_p_value, KlPool, MinMax,
};

/// Default number of sign-flip resamples for the skewness test.
pub const DEFAULT_PERMUTATIONS: usize = 200;
/// Smallest accepted resample count.
pub const MIN_PERMUTATIONS: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScoringError {
    #[error("all property weights are zero")]
    NoActiveProperties,
    #[error("weight for `{property}` must lie in [0, 1], got {value}")]
    InvalidWeight { property: String, value: f64 },
    #[error("malformed weight entry `{0}`; expected name=value")]
    MalformedWeights(String),
    #[error("unknown property `{0}`")]
    UnknownProperty(String),
    #[error("property `{0}` given twice")]
    DuplicateWeight(String),
    #[error("axis pair ({0}, {1}) is not a valid off-diagonal pair")]
    InvalidPair(usize, usize),
    #[error("need at least 2 axes, dataset has {0}")]
    TooFewAxes(usize),
    #[error("need at least {MIN_PERMUTATIONS} permutations, got {0}")]
    TooFewPermutations(usize),
    #[error("fan needs at least 2 bins, got {0}")]
    TooFewBins(usize),
    #[error(transparent)]
    Window(#[from] WindowSpecError),
}

impl ScoringError {
    pub fn code(&self) -> &'static str {
        match self {
            ScoringError::NoActiveProperties => "no_active_properties",
            ScoringError::InvalidWeight { .. } => "invalid_weight",
            ScoringError::MalformedWeights(_) => "malformed_weights",
            ScoringError::UnknownProperty(_) => "unknown_property",
            ScoringError::DuplicateWeight(_) => "duplicate_weight",
            ScoringError::InvalidPair(..) => "invalid_pair",
            ScoringError::TooFewAxes(_) => "too_few_axes",
            ScoringError::TooFewPermutations(_) => "too_few_permutations",
            ScoringError::TooFewBins(_) => "too_few_bins",
            ScoringError::Window(_) => "invalid_window",
        }
    }
}

/// A value per property, serialized as a JSON object keyed by property in
/// canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyMap<T>(pub [T; PropertyId::COUNT]);

/// Per-property scalar scores.
pub type PropertyScores = PropertyMap<f64>;

impl<T> PropertyMap<T> {
    pub fn from_fn(f: impl FnMut(usize) -> T) -> Self {
        Self(std::array::from_fn(f))
    }

    pub fn get(&self, p: PropertyId) -> &T {
        &self.0[p.index()]
    }

    pub fn get_mut(&mut self, p: PropertyId) -> &mut T {
        &mut self.0[p.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (PropertyId, &T)> {
        PropertyId::ALL.into_iter().zip(self.0.iter())
    }
}

impl<T: Default> Default for PropertyMap<T> {
    fn default() -> Self {
        Self::from_fn(|_| T::default())
    }
}

impl<T: Serialize> Serialize for PropertyMap<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(PropertyId::COUNT))?;
        for (p, v) in self.iter() {
            map.serialize_entry(p.key(), v)?;
        }
        map.end()
    }
}

impl<'de, T: Deserialize<'de>> Deserialize<'de> for PropertyMap<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let mut entries: BTreeMap<PropertyId, T> = BTreeMap::deserialize(deserializer)?;
        let mut out = Vec::with_capacity(PropertyId::COUNT);
        for p in PropertyId::ALL {
            out.push(
                entries
                    .remove(&p)
                    .ok_or_else(|| D::Error::custom(format!("missing property `{p}`")))?,
            );
        }
        let arr: [T; PropertyId::COUNT] = out
            .try_into()
            .map_err(|_| D::Error::custom("property count"))?;
        Ok(Self(arr))
    }
}

/// Property weights in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Weights(PropertyMap<f64>);

impl Weights {
    /// All zero.
    pub fn zero() -> Self {
        Self::default()
    }

    /// Weight 1 on a single property.
    pub fn only(p: PropertyId) -> Self {
        let mut w = Self::zero();
        w.0 .0[p.index()] = 1.0;
        w
    }

    /// Weight 1 on every property.
    pub fn uniform() -> Self {
        Self(PropertyMap([1.0; PropertyId::COUNT]))
    }

    pub fn set(&mut self, p: PropertyId, value: f64) -> Result<(), ScoringError> {
        if !(0.0..=1.0).contains(&value) {
            return Err(ScoringError::InvalidWeight {
                property: p.key().to_owned(),
                value,
            });
        }
        *self.0.get_mut(p) = value;
        Ok(())
    }

    pub fn with(mut self, p: PropertyId, value: f64) -> Result<Self, ScoringError> {
        self.set(p, value)?;
        Ok(self)
    }

    pub fn get(&self, p: PropertyId) -> f64 {
        *self.0.get(p)
    }

    pub fn total(&self) -> f64 {
        self.0 .0.iter().sum()
    }

    pub fn is_active(&self) -> bool {
        self.0 .0.iter().any(|&w| w > 0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (PropertyId, f64)> + '_ {
        self.0.iter().map(|(p, &w)| (p, w))
    }

    /// Checks values again; needed after deserializing untrusted input.
    pub fn validate(&self) -> Result<(), ScoringError> {
        for (p, w) in self.iter() {
            if !(0.0..=1.0).contains(&w) {
                return Err(ScoringError::InvalidWeight {
                    property: p.key().to_owned(),
                    value: w,
                });
            }
        }
        Ok(())
    }

    /// Errors with [`ScoringError::NoActiveProperties`] when all weights are 0.
    pub fn require_active(&self) -> Result<(), ScoringError> {
        self.validate()?;
        if self.is_active() {
            Ok(())
        } else {
            Err(ScoringError::NoActiveProperties)
        }
    }
}

/// Parses `pos_corr=1.0,fan=0.5`. Unnamed properties get weight 0.
impl FromStr for Weights {
    type Err = ScoringError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut w = Weights::zero();
        let mut seen = [false; PropertyId::COUNT];
        for entry in s.split(',').map(str::trim).filter(|e| !e.is_empty()) {
            let (name, value) = entry
                .split_once('=')
                .ok_or_else(|| ScoringError::MalformedWeights(entry.to_owned()))?;
            let p: PropertyId = name
                .trim()
                .parse()
                .map_err(|_| ScoringError::UnknownProperty(name.trim().to_owned()))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| ScoringError::MalformedWeights(entry.to_owned()))?;
            if std::mem::replace(&mut seen[p.index()], true) {
                return Err(ScoringError::DuplicateWeight(p.key().to_owned()));
            }
            w.set(p, value)?;
        }
        Ok(w)
    }
}

impl fmt::Display for Weights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (p, v) in self.iter().filter(|(_, v)| *v > 0.0) {
            if !first {
                f.write_str(",")?;
            }
            write!(f, "{}={}", p.key(), v)?;
            first = false;
        }
        Ok(())
    }
}

/// Everything that determines normalized scores, apart from the dataset.
/// Weights are deliberately absent: they only enter at matrix assembly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub spec: WindowSpec,
    pub seed: u64,
    pub permutations: usize,
    pub fan_bins: usize,
}

impl AnalysisConfig {
    pub fn new(spec: WindowSpec, seed: u64) -> Self {
        Self {
            spec,
            seed,
            permutations: DEFAULT_PERMUTATIONS,
            fan_bins: DEFAULT_FAN_BINS,
        }
    }

    pub fn with_permutations(mut self, permutations: usize) -> Self {
        self.permutations = permutations;
        self
    }

    pub fn validate(&self) -> Result<(), ScoringError> {
        if self.permutations < MIN_PERMUTATIONS {
            return Err(ScoringError::TooFewPermutations(self.permutations));
        }
        if self.fan_bins < 2 {
            return Err(ScoringError::TooFewBins(self.fan_bins));
        }
        Ok(())
    }

    /// Detector invocations needed for a `dims`-axis dataset: one run of each
    /// of the twelve properties per window per ordered pair.
    pub fn estimated_invocations(&self, dims: usize) -> u64 {
        let pairs = (dims * dims.saturating_sub(1)) as u64;
        self.spec.window_count() as u64 * pairs * PropertyId::COUNT as u64
    }

    /// Hashable identity for caches.
    pub fn cache_key(&self) -> (u64, u64, u64, usize, usize) {
        (
            self.spec.window_fraction().to_bits(),
            self.spec.stride_fraction().to_bits(),
            self.seed,
            self.permutations,
            self.fan_bins,
        )
    }
}
