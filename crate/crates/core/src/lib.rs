//! Localized line-pattern detection and axis ordering for parallel
//! coordinate plots.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`data`] loads a CSV table and min-max normalizes every column.
//! 2. [`windows`] slides a value-based window along each primary axis.
//! 3. [`detectors`] computes twelve raw line-pattern measures per window, and
//!    [`scoring`] turns them into confidence-adjusted `[0, 1]` scores,
//!    per-pair window profiles, and a directed score matrix.
//! 4. [`ordering`] finds the best axis sequence over that matrix, either
//!    exactly (branch and bound) or greedily; [`session`] lets a user build
//!    the sequence one pair at a time instead.
//!
//! [`report`] assembles the JSON document shared by the CLI and the HTTP
//! service.
//!
//! Per-pair and per-window work is data-parallel. With the `parallel` feature
//! (on by default) it runs on rayon; [`Execution::Sequential`] or building
//! without the feature gives the single-threaded path. Both paths produce
//! bit-identical results.

pub mod data;
pub mod detectors;
pub mod exec;
pub mod ordering;
pub mod report;
pub mod scoring;
pub mod session;
pub mod windows;

pub use data::{Column, DataError, Dataset, LoadReport};
pub use detectors::PropertyId;
pub use exec::Execution;
pub use ordering::{OrderingError, OrderingMethod, OrderingResult};
pub use scoring::{
    Analysis, AnalysisConfig, PropertyScores, ScoreMatrix, ScoringError, Weights, WindowProfile,
};
pub use session::{Session, SessionError};
pub use windows::{Window, WindowSpec, WindowSpecError};
