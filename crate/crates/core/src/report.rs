//! The JSON result document shared by the CLI and the HTTP service.

use serde::{Deserialize, Serialize};

use crate::detectors::PropertyId;
use crate::exec::Execution;
use crate::ordering::{order, OrderingError, OrderingMode, OrderingResult};
use crate::scoring::{
    Analysis, PropertyMap, PropertyScores, ScoreMatrix, ScoringError, Weights, WindowProfile,
};
use crate::windows::WindowSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixSection {
    pub cells: Vec<Vec<Option<f64>>>,
    pub breakdown: Vec<Vec<Option<PropertyScores>>>,
}

impl From<ScoreMatrix> for MatrixSection {
    fn from(m: ScoreMatrix) -> Self {
        Self {
            cells: m.cells,
            breakdown: m.breakdown,
        }
    }
}

/// Matrix, profiles and (optionally) an ordering for one dataset under one
/// set of weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub dims: Vec<String>,
    pub window_spec: WindowSpec,
    pub weights: Weights,
    pub seed: u64,
    pub permutations: usize,
    pub matrix: MatrixSection,
    pub profiles: Vec<WindowProfile>,
    pub dropped_rows: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ordering: Option<OrderingResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub donut: Option<PropertyScores>,
}

impl ResultDocument {
    pub fn build(
        analysis: &Analysis,
        weights: &Weights,
        dropped_rows: usize,
    ) -> Result<Self, ScoringError> {
        let matrix = analysis.matrix(weights)?;
        let config = analysis.config();
        Ok(Self {
            dims: analysis.dims().to_vec(),
            window_spec: config.spec,
            weights: weights.clone(),
            seed: config.seed,
            permutations: config.permutations,
            matrix: matrix.into(),
            profiles: analysis.profiles().cloned().collect(),
            dropped_rows,
            ordering: None,
            donut: None,
        })
    }

    pub fn with_ordering(mut self, report: &OrderReport) -> Self {
        self.ordering = Some(report.ordering.clone());
        self.donut = Some(report.donut.clone());
        self
    }

    /// Every number in the document is finite and every score lies in
    /// `[0, 1]`. Checked before anything is written out, since JSON encoders
    /// turn NaN into `null` silently.
    pub fn check_ranges(&self) -> Result<(), String> {
        let unit = |what: &str, v: f64| {
            if v.is_finite() && (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(format!("{what} out of range: {v}"))
            }
        };
        for (i, row) in self.matrix.cells.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                if let Some(v) = c {
                    unit(&format!("cell ({i},{j})"), *v)?;
                }
                if let Some(b) = &self.matrix.breakdown[i][j] {
                    for (p, v) in b.iter() {
                        unit(&format!("breakdown ({i},{j}) {p}"), *v)?;
                    }
                }
            }
        }
        for prof in &self.profiles {
            for (p, series) in prof.per_property.iter() {
                for v in series.iter().flatten() {
                    unit(&format!("profile {:?} {p}", prof.pair), *v)?;
                }
            }
        }
        if let Some(o) = &self.ordering {
            if !o.total_score.is_finite() {
                return Err("ordering total not finite".into());
            }
        }
        Ok(())
    }
}

/// Ordering plus everything needed to explain it: the profile of each
/// adjacency and each property's share of the total score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderReport {
    pub ordering: OrderingResult,
    pub profiles: Vec<WindowProfile>,
    pub donut: PropertyScores,
}

#[derive(Debug, thiserror::Error)]
pub enum OrderReportError {
    #[error(transparent)]
    Scoring(#[from] ScoringError),
    #[error(transparent)]
    Ordering(#[from] OrderingError),
}

impl OrderReportError {
    pub fn code(&self) -> &'static str {
        match self {
            OrderReportError::Scoring(e) => e.code(),
            OrderReportError::Ordering(e) => e.code(),
        }
    }
}

impl OrderReport {
    pub fn build(
        analysis: &Analysis,
        weights: &Weights,
        mode: OrderingMode,
        exec: Execution,
    ) -> Result<Self, OrderReportError> {
        let matrix = analysis.matrix(weights)?;
        let ordering = order(&matrix, mode, exec)?;
        Self::explain(analysis, weights, ordering)
    }

    pub fn explain(
        analysis: &Analysis,
        weights: &Weights,
        ordering: OrderingResult,
    ) -> Result<Self, OrderReportError> {
        let profiles = ordering
            .per_edge
            .iter()
            .map(|e| analysis.profile(e.from, e.to).cloned())
            .collect::<Result<Vec<_>, _>>()?;
        let donut = donut_shares(&ordering, weights);
        Ok(Self {
            ordering,
            profiles,
            donut,
        })
    }
}

/// Share of the ordering's weighted score owed to each property:
/// `sum_edges w_p * b_p`, normalized to sum to 1 (all zero if nothing scored).
pub fn donut_shares(ordering: &OrderingResult, weights: &Weights) -> PropertyScores {
    let raw: PropertyMap<f64> = PropertyMap::from_fn(|k| {
        let p = PropertyId::ALL[k];
        ordering
            .per_edge
            .iter()
            .map(|e| weights.get(p) * e.breakdown.get(p))
            .sum()
    });
    let total: f64 = raw.0.iter().sum();
    if total > 0.0 {
        PropertyMap::from_fn(|k| raw.0[k] / total)
    } else {
        PropertyScores::default()
    }
}
