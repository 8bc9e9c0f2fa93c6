//! Human-in-the-loop ordering: the user fixes one adjacency at a time and may
//! change weights between steps.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ordering::{complete_greedy, EdgeScore, OrderingMethod, OrderingResult};
use crate::scoring::{Analysis, ScoreMatrix, ScoringError, Weights, WindowProfile};
use crate::windows::WindowSpec;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SessionError {
    #[error("axis {0} does not exist")]
    UnknownAxis(usize),
    #[error("axis {0} is already in the ordering")]
    AxisAlreadyUsed(usize),
    #[error("next pair must start at the current tail {tail}, got {got}")]
    BrokenChain { tail: usize, got: usize },
    #[error("a pair needs two different axes, got ({0}, {0})")]
    SameAxis(usize),
    #[error("nothing to undo")]
    NothingToUndo,
    #[error(transparent)]
    Scoring(#[from] ScoringError),
}

impl SessionError {
    pub fn code(&self) -> &'static str {
        match self {
            SessionError::UnknownAxis(_) => "unknown_axis",
            SessionError::AxisAlreadyUsed(_) => "axis_already_used",
            SessionError::BrokenChain { .. } => "broken_chain",
            SessionError::SameAxis(_) => "same_axis",
            SessionError::NothingToUndo => "nothing_to_undo",
            SessionError::Scoring(e) => e.code(),
        }
    }
}

/// One user choice and the weights in force when it was made.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub pair: (usize, usize),
    pub weights: Weights,
}

/// Serializable view of a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub id: String,
    pub dataset_ref: String,
    pub prefix: Vec<usize>,
    pub current_weights: Weights,
    pub spec: WindowSpec,
    pub seed: u64,
    pub step_log: Vec<StepRecord>,
}

/// Output of [`Session::finalize`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finalized {
    pub ordering: OrderingResult,
    /// Profile of each adjacent pair, in order.
    pub profiles: Vec<WindowProfile>,
}

/// Mutable HIL state over a shared, read-only [`Analysis`]. Operations never
/// touch the analysis; weights only change how it is averaged.
#[derive(Debug, Clone)]
pub struct Session {
    state: SessionState,
    analysis: Arc<Analysis>,
}

impl Session {
    /// Opens a session with an empty prefix and returns the full matrix.
    pub fn start(
        id: impl Into<String>,
        dataset_ref: impl Into<String>,
        analysis: Arc<Analysis>,
        weights: Weights,
    ) -> Result<(Self, ScoreMatrix), SessionError> {
        let matrix = analysis.matrix(&weights)?;
        let config = *analysis.config();
        let session = Self {
            state: SessionState {
                id: id.into(),
                dataset_ref: dataset_ref.into(),
                prefix: Vec::new(),
                current_weights: weights,
                spec: config.spec,
                seed: config.seed,
                step_log: Vec::new(),
            },
            analysis,
        };
        Ok((session, matrix))
    }

    pub fn state(&self) -> &SessionState {
        &self.state
    }

    pub fn id(&self) -> &str {
        &self.state.id
    }

    pub fn prefix(&self) -> &[usize] {
        &self.state.prefix
    }

    pub fn analysis(&self) -> &Arc<Analysis> {
        &self.analysis
    }

    fn dims(&self) -> usize {
        self.analysis.size()
    }

    fn is_used(&self, axis: usize) -> bool {
        self.state.prefix.contains(&axis)
    }

    /// Cells the user may pick next: everything off-diagonal before the first
    /// step, afterwards only the tail's row towards unused axes.
    pub fn candidate_matrix(&self) -> Result<ScoreMatrix, SessionError> {
        let full = self.analysis.matrix(&self.state.current_weights)?;
        Ok(match self.state.prefix.last() {
            None => full,
            Some(&tail) => full.masked(|i, j| i == tail && !self.is_used(j)),
        })
    }

    /// Fixes the adjacency `i -> j` and returns the next candidate matrix.
    pub fn choose_pair(&mut self, i: usize, j: usize) -> Result<ScoreMatrix, SessionError> {
        let d = self.dims();
        for axis in [i, j] {
            if axis >= d {
                return Err(SessionError::UnknownAxis(axis));
            }
        }
        match self.state.prefix.last() {
            None => {
                if i == j {
                    return Err(SessionError::SameAxis(i));
                }
            }
            Some(&tail) => {
                if i != tail {
                    return Err(SessionError::BrokenChain { tail, got: i });
                }
                if self.is_used(j) {
                    return Err(SessionError::AxisAlreadyUsed(j));
                }
            }
        }
        if self.state.prefix.is_empty() {
            self.state.prefix.extend([i, j]);
        } else {
            self.state.prefix.push(j);
        }
        self.state.step_log.push(StepRecord {
            pair: (i, j),
            weights: self.state.current_weights.clone(),
        });
        self.candidate_matrix()
    }

    /// Replaces the weights for future steps; the fixed prefix stays.
    pub fn set_weights(&mut self, weights: Weights) -> Result<ScoreMatrix, SessionError> {
        weights.require_active()?;
        self.state.current_weights = weights;
        self.candidate_matrix()
    }

    /// Rolls back the last step. After the first step this clears both axes.
    pub fn undo(&mut self) -> Result<ScoreMatrix, SessionError> {
        if self.state.step_log.pop().is_none() {
            return Err(SessionError::NothingToUndo);
        }
        self.state.prefix.pop();
        if self.state.prefix.len() == 1 {
            self.state.prefix.clear();
        }
        self.candidate_matrix()
    }

    /// Final ordering plus the profiles for each of its adjacencies.
    ///
    /// Hand-picked edges are scored with the weights they were picked under;
    /// any unfinished remainder is completed greedily from the tail under the
    /// current weights.
    pub fn finalize(&self) -> Result<Finalized, SessionError> {
        let d = self.dims();
        let current = self.analysis.matrix(&self.state.current_weights)?;
        let prefix = &self.state.prefix;
        let (order, method) = if prefix.len() == d {
            (prefix.clone(), OrderingMethod::Manual)
        } else if prefix.is_empty() {
            (complete_greedy(&current, prefix), OrderingMethod::Greedy)
        } else {
            (
                complete_greedy(&current, prefix),
                OrderingMethod::ManualGreedyCompletion,
            )
        };

        let mut per_edge = Vec::with_capacity(d.saturating_sub(1));
        for (k, e) in order.windows(2).enumerate() {
            let (from, to) = (e[0], e[1]);
            let score = match self.state.step_log.get(k) {
                Some(step) => self
                    .analysis
                    .matrix(&step.weights)?
                    .cell(from, to)
                    .unwrap_or(0.0),
                None => current.cell(from, to).unwrap_or(0.0),
            };
            per_edge.push(EdgeScore {
                from,
                to,
                score,
                breakdown: self.analysis.pair_scores(from, to)?.clone(),
            });
        }
        let total_score = per_edge.iter().map(|e| e.score).sum();
        let profiles = per_edge
            .iter()
            .map(|e| self.analysis.profile(e.from, e.to).cloned())
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Finalized {
            ordering: OrderingResult {
                order,
                total_score,
                per_edge,
                method,
            },
            profiles,
        })
    }
}
