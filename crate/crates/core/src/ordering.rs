//! Axis orderings over a [`ScoreMatrix`].
//!
//! An ordering is an open path through every axis (a PCP has no edge from the
//! last axis back to the first) that maximizes the sum of directed cell scores
//! along consecutive axes. Exact search is branch and bound; above
//! [`MAX_EXACT_DIMS`] axes it falls back to a greedy chain.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Execution;
use crate::scoring::{PropertyScores, ScoreMatrix};

/// Largest dimensionality solved exactly.
pub const MAX_EXACT_DIMS: usize = 15;

// Slack when pruning, so rounding in the bound never cuts an optimal branch.
const PRUNE_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OrderingError {
    #[error("score matrix is empty")]
    EmptyMatrix,
    #[error("unknown ordering mode `{0}`; expected tsp or greedy")]
    UnknownMode(String),
}

impl OrderingError {
    pub fn code(&self) -> &'static str {
        match self {
            OrderingError::EmptyMatrix => "empty_matrix",
            OrderingError::UnknownMode(_) => "unknown_mode",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderingMethod {
    BranchAndBound,
    Greedy,
    /// Every adjacency was picked by hand.
    Manual,
    /// A hand-picked prefix, finished greedily.
    ManualGreedyCompletion,
}

/// Requested search strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OrderingMode {
    #[default]
    Tsp,
    Greedy,
}

impl FromStr for OrderingMode {
    type Err = OrderingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tsp" => Ok(OrderingMode::Tsp),
            "greedy" => Ok(OrderingMode::Greedy),
            other => Err(OrderingError::UnknownMode(other.to_owned())),
        }
    }
}

impl fmt::Display for OrderingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OrderingMode::Tsp => "tsp",
            OrderingMode::Greedy => "greedy",
        })
    }
}

/// One adjacency of the final ordering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeScore {
    pub from: usize,
    pub to: usize,
    pub score: f64,
    pub breakdown: PropertyScores,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderingResult {
    pub order: Vec<usize>,
    pub total_score: f64,
    pub per_edge: Vec<EdgeScore>,
    pub method: OrderingMethod,
}

impl OrderingResult {
    /// Builds the result for a fixed order, reading scores from `matrix`.
    pub fn from_order(matrix: &ScoreMatrix, order: Vec<usize>, method: OrderingMethod) -> Self {
        let per_edge: Vec<EdgeScore> = order
            .windows(2)
            .map(|e| EdgeScore {
                from: e[0],
                to: e[1],
                score: matrix.cell(e[0], e[1]).unwrap_or(0.0),
                breakdown: matrix.breakdown_at(e[0], e[1]).cloned().unwrap_or_default(),
            })
            .collect();
        let total_score = per_edge.iter().map(|e| e.score).sum();
        Self {
            order,
            total_score,
            per_edge,
            method,
        }
    }
}

fn dense(matrix: &ScoreMatrix) -> Vec<Vec<f64>> {
    let d = matrix.size();
    (0..d)
        .map(|i| (0..d).map(|j| matrix.cell(i, j).unwrap_or(0.0)).collect())
        .collect()
}

/// Runs `mode`, switching to greedy above [`MAX_EXACT_DIMS`].
pub fn order(
    matrix: &ScoreMatrix,
    mode: OrderingMode,
    exec: Execution,
) -> Result<OrderingResult, OrderingError> {
    match mode {
        OrderingMode::Tsp => order_tsp_with(matrix, exec),
        OrderingMode::Greedy => order_greedy(matrix),
    }
}

pub fn order_tsp(matrix: &ScoreMatrix) -> Result<OrderingResult, OrderingError> {
    order_tsp_with(matrix, Execution::default())
}

/// Exact maximum-score open path. Ties go to the lexicographically smallest
/// order. Start nodes are searched concurrently under `exec`; the shared
/// incumbent only ever tightens pruning, so the answer is the same either way.
pub fn order_tsp_with(
    matrix: &ScoreMatrix,
    exec: Execution,
) -> Result<OrderingResult, OrderingError> {
    let d = matrix.size();
    if d == 0 {
        return Err(OrderingError::EmptyMatrix);
    }
    if d > MAX_EXACT_DIMS {
        return order_greedy(matrix);
    }
    if d == 1 {
        return Ok(OrderingResult::from_order(
            matrix,
            vec![0],
            OrderingMethod::BranchAndBound,
        ));
    }
    let w = dense(matrix);
    let greedy = greedy_order(&w, &[]);
    let incumbent = AtomicU64::new(to_ordered(path_score(&w, &greedy)));

    let per_start = exec.map_range(d, |start| {
        let mut search = Search {
            w: &w,
            shared: &incumbent,
            best: None,
            path: Vec::with_capacity(d),
        };
        search.path.push(start);
        search.dfs(1u32 << start, 0.0);
        search.best
    });
    let (_, best) = per_start
        .into_iter()
        .flatten()
        .reduce(|a, b| if better(&b, &a) { b } else { a })
        .expect("some path is always found");
    Ok(OrderingResult::from_order(
        matrix,
        best,
        OrderingMethod::BranchAndBound,
    ))
}

fn better(cand: &(f64, Vec<usize>), cur: &(f64, Vec<usize>)) -> bool {
    cand.0 > cur.0 || (cand.0 == cur.0 && cand.1 < cur.1)
}

fn path_score(w: &[Vec<f64>], order: &[usize]) -> f64 {
    order.windows(2).map(|e| w[e[0]][e[1]]).sum()
}

// Order-preserving f64 -> u64 so the incumbent can use fetch_max.
fn to_ordered(v: f64) -> u64 {
    let bits = v.to_bits();
    if bits >> 63 == 1 {
        !bits
    } else {
        bits | (1 << 63)
    }
}

fn from_ordered(u: u64) -> f64 {
    if u >> 63 == 1 {
        f64::from_bits(u & !(1 << 63))
    } else {
        f64::from_bits(!u)
    }
}

struct Search<'a> {
    w: &'a [Vec<f64>],
    shared: &'a AtomicU64,
    best: Option<(f64, Vec<usize>)>,
    path: Vec<usize>,
}

impl Search<'_> {
    /// Upper bound on what the unvisited axes can still add: the tail's best
    /// edge into them, plus each unvisited axis's best edge within them,
    /// minus the smallest such edge (the last axis has no successor).
    fn bound(&self, visited: u32) -> f64 {
        let d = self.w.len();
        let tail = *self.path.last().expect("nonempty path");
        let remaining: Vec<usize> = (0..d).filter(|&r| visited & (1 << r) == 0).collect();
        let into = remaining
            .iter()
            .map(|&r| self.w[tail][r])
            .fold(f64::NEG_INFINITY, f64::max);
        if remaining.len() == 1 {
            return into;
        }
        let mut sum = 0.0;
        let mut min_out = f64::INFINITY;
        for &r in &remaining {
            let out = remaining
                .iter()
                .filter(|&&s| s != r)
                .map(|&s| self.w[r][s])
                .fold(f64::NEG_INFINITY, f64::max);
            sum += out;
            min_out = min_out.min(out);
        }
        into + sum - min_out
    }

    fn dfs(&mut self, visited: u32, partial: f64) {
        let d = self.w.len();
        if self.path.len() == d {
            let cand = (partial, self.path.clone());
            if self.best.as_ref().is_none_or(|cur| better(&cand, cur)) {
                self.shared
                    .fetch_max(to_ordered(partial), AtomicOrdering::Relaxed);
                self.best = Some(cand);
            }
            return;
        }
        let threshold = from_ordered(self.shared.load(AtomicOrdering::Relaxed));
        if partial + self.bound(visited) + PRUNE_EPS <= threshold {
            return;
        }
        let tail = *self.path.last().expect("nonempty path");
        for next in 0..d {
            if visited & (1 << next) != 0 {
                continue;
            }
            self.path.push(next);
            self.dfs(visited | (1 << next), partial + self.w[tail][next]);
            self.path.pop();
        }
    }
}

/// Greedy chain: start with the single best edge, then keep appending the
/// unused axis with the best edge out of the tail. Ties go to lower indices.
pub fn order_greedy(matrix: &ScoreMatrix) -> Result<OrderingResult, OrderingError> {
    let d = matrix.size();
    if d == 0 {
        return Err(OrderingError::EmptyMatrix);
    }
    let order = greedy_order(&dense(matrix), &[]);
    Ok(OrderingResult::from_order(
        matrix,
        order,
        OrderingMethod::Greedy,
    ))
}

/// Extends `prefix` greedily to a full order. An empty prefix starts from the
/// best edge; a one-element prefix chains from that axis.
pub fn complete_greedy(matrix: &ScoreMatrix, prefix: &[usize]) -> Vec<usize> {
    greedy_order(&dense(matrix), prefix)
}

fn greedy_order(w: &[Vec<f64>], prefix: &[usize]) -> Vec<usize> {
    let d = w.len();
    let mut order = prefix.to_vec();
    if order.is_empty() {
        if d == 1 {
            return vec![0];
        }
        let mut best = (f64::NEG_INFINITY, 0, 1);
        for (i, row) in w.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if i != j && v > best.0 {
                    best = (v, i, j);
                }
            }
        }
        order.extend([best.1, best.2]);
    }
    let mut used = vec![false; d];
    for &a in &order {
        used[a] = true;
    }
    while order.len() < d {
        let tail = *order.last().expect("nonempty");
        let mut pick = None;
        for (j, &v) in w[tail].iter().enumerate() {
            if !used[j] && pick.is_none_or(|(_, bv)| v > bv) {
                pick = Some((j, v));
            }
        }
        let (j, _) = pick.expect("an unused axis remains");
        used[j] = true;
        order.push(j);
    }
    order
}
