//! Value-based sliding windows over a normalized primary axis.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Windows with fewer members than this yield no score.
pub const MIN_WINDOW_POPULATION: usize = 5;

const EDGE_EPS: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WindowSpecError {
    #[error("window fraction {0} outside (0, 1]")]
    WindowFraction(f64),
    #[error("stride fraction {0} outside (0, 1]")]
    StrideFraction(f64),
    #[error("stride {stride} exceeds window {window}; windows would leave gaps")]
    StrideExceedsWindow { window: f64, stride: f64 },
}

/// Window size and step, both as fractions of the normalized axis range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    window_fraction: f64,
    stride_fraction: f64,
}

impl WindowSpec {
    pub fn new(window_fraction: f64, stride_fraction: f64) -> Result<Self, WindowSpecError> {
        if !(window_fraction > 0.0 && window_fraction <= 1.0) {
            return Err(WindowSpecError::WindowFraction(window_fraction));
        }
        if !(stride_fraction > 0.0 && stride_fraction <= 1.0) {
            return Err(WindowSpecError::StrideFraction(stride_fraction));
        }
        if stride_fraction > window_fraction {
            return Err(WindowSpecError::StrideExceedsWindow {
                window: window_fraction,
                stride: stride_fraction,
            });
        }
        Ok(Self {
            window_fraction,
            stride_fraction,
        })
    }

    /// Window with the default 50% overlap.
    pub fn with_window(window_fraction: f64) -> Result<Self, WindowSpecError> {
        Self::new(window_fraction, window_fraction / 2.0)
    }

    pub fn window_fraction(&self) -> f64 {
        self.window_fraction
    }

    pub fn stride_fraction(&self) -> f64 {
        self.stride_fraction
    }

    /// Start positions of every window, ascending.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for k in 0.. {
            let lo = k as f64 * self.stride_fraction;
            let hi = lo + self.window_fraction;
            if hi >= 1.0 - EDGE_EPS {
                out.push((lo, 1.0));
                break;
            }
            out.push((lo, hi));
        }
        out
    }

    pub fn window_count(&self) -> usize {
        self.bounds().len()
    }
}

/// One window position on a primary axis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
    /// Rows with `lo <= value <= hi`, ascending.
    pub member_rows: Vec<usize>,
}

impl Window {
    pub fn len(&self) -> usize {
        self.member_rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.member_rows.is_empty()
    }

    /// Whether the window holds enough rows to be scored.
    pub fn is_populated(&self) -> bool {
        self.member_rows.len() >= MIN_WINDOW_POPULATION
    }
}

/// Slides `spec` across a normalized axis and resolves each window's rows.
pub fn make_windows(axis: &[f64], spec: &WindowSpec) -> Vec<Window> {
    let mut by_value: Vec<usize> = (0..axis.len()).collect();
    by_value.sort_by(|&a, &b| axis[a].total_cmp(&axis[b]).then(a.cmp(&b)));
    let sorted: Vec<f64> = by_value.iter().map(|&r| axis[r]).collect();

    spec.bounds()
        .into_iter()
        .map(|(lo, hi)| {
            let start = sorted.partition_point(|&v| v < lo);
            let end = sorted.partition_point(|&v| v <= hi);
            let mut member_rows = by_value[start..end.max(start)].to_vec();
            member_rows.sort_unstable();
            Window {
                lo,
                hi,
                member_rows,
            }
        })
        .collect()
}
