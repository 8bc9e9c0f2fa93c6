//! CSV ingestion and per-column min-max normalization.

use std::collections::HashSet;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

/// Fewer rows than this and no detector can run.
pub const MIN_ROWS: usize = 2;

/// Value assigned to every cell of a constant column.
pub const CONSTANT_COLUMN_VALUE: f64 = 0.5;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("file not found: {path}")]
    FileNotFound { path: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed csv: {0}")]
    Csv(String),
    #[error("dataset has {usable_rows} usable rows, need at least {MIN_ROWS}")]
    EmptyDataset { usable_rows: usize },
    #[error("column `{column}` is not numeric (first offending row {row})")]
    NonNumericColumn { column: String, row: usize },
    #[error("duplicate column name `{name}`")]
    DuplicateColumnName { name: String },
    #[error("column names must be nonempty")]
    EmptyColumnName,
    #[error("unknown column `{name}`")]
    UnknownColumn { name: String },
    #[error("no numeric columns selected")]
    NoColumns,
    #[error("column `{column}` has {len} values, expected {expected}")]
    RaggedColumns {
        column: String,
        len: usize,
        expected: usize,
    },
    #[error("column `{column}` holds a non-finite value at row {row}")]
    NonFinite { column: String, row: usize },
}

impl DataError {
    /// Stable machine-readable code, shared by the CLI and HTTP error bodies.
    pub fn code(&self) -> &'static str {
        match self {
            DataError::FileNotFound { .. } => "file_not_found",
            DataError::Io(_) => "io_error",
            DataError::Csv(_) => "malformed_csv",
            DataError::EmptyDataset { .. } => "empty_dataset",
            DataError::NonNumericColumn { .. } => "non_numeric_column",
            DataError::DuplicateColumnName { .. } => "duplicate_column_name",
            DataError::EmptyColumnName => "empty_column_name",
            DataError::UnknownColumn { .. } => "unknown_column",
            DataError::NoColumns => "no_columns",
            DataError::RaggedColumns { .. } => "ragged_columns",
            DataError::NonFinite { .. } => "non_finite_value",
        }
    }
}

/// One numeric axis: the raw values plus their `[0, 1]` image.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Column {
    name: String,
    raw: Vec<f64>,
    normalized: Vec<f64>,
    raw_min: f64,
    raw_max: f64,
}

impl Column {
    /// Builds a column and its normalized copy. All values must be finite.
    pub fn new(name: impl Into<String>, raw: Vec<f64>) -> Result<Self, DataError> {
        let name = name.into();
        if name.trim().is_empty() {
            return Err(DataError::EmptyColumnName);
        }
        if let Some(row) = raw.iter().position(|v| !v.is_finite()) {
            return Err(DataError::NonFinite { column: name, row });
        }
        let (raw_min, raw_max) = raw
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        let normalized = normalize(&raw, raw_min, raw_max);
        Ok(Self {
            name,
            raw,
            normalized,
            raw_min,
            raw_max,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn raw(&self) -> &[f64] {
        &self.raw
    }

    pub fn normalized(&self) -> &[f64] {
        &self.normalized
    }

    pub fn raw_min(&self) -> f64 {
        self.raw_min
    }

    pub fn raw_max(&self) -> f64 {
        self.raw_max
    }

    pub fn is_constant(&self) -> bool {
        self.raw_max <= self.raw_min
    }

    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }
}

fn normalize(raw: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    if hi > lo {
        let span = hi - lo;
        raw.iter()
            .map(|&v| ((v - lo) / span).clamp(0.0, 1.0))
            .collect()
    } else {
        vec![CONSTANT_COLUMN_VALUE; raw.len()]
    }
}

/// Immutable column-major table. Every downstream stage reads the normalized
/// values only.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dataset {
    name: String,
    columns: Vec<Column>,
    row_count: usize,
}

impl Dataset {
    pub fn new(name: impl Into<String>, columns: Vec<Column>) -> Result<Self, DataError> {
        let Some(first) = columns.first() else {
            return Err(DataError::NoColumns);
        };
        let row_count = first.len();
        let mut seen = HashSet::new();
        for c in &columns {
            if c.len() != row_count {
                return Err(DataError::RaggedColumns {
                    column: c.name.clone(),
                    len: c.len(),
                    expected: row_count,
                });
            }
            if !seen.insert(c.name.as_str()) {
                return Err(DataError::DuplicateColumnName {
                    name: c.name.clone(),
                });
            }
        }
        if row_count < MIN_ROWS {
            return Err(DataError::EmptyDataset {
                usable_rows: row_count,
            });
        }
        Ok(Self {
            name: name.into(),
            columns,
            row_count,
        })
    }

    /// Convenience constructor from `(name, raw values)` pairs.
    pub fn from_columns<S: Into<String>>(
        name: impl Into<String>,
        columns: Vec<(S, Vec<f64>)>,
    ) -> Result<Self, DataError> {
        let columns = columns
            .into_iter()
            .map(|(n, v)| Column::new(n, v))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(name, columns)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, index: usize) -> &Column {
        &self.columns[index]
    }

    pub fn dims(&self) -> usize {
        self.columns.len()
    }

    pub fn row_count(&self) -> usize {
        self.row_count
    }

    pub fn names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    /// Normalized tuple for one row, in column order.
    pub fn normalized_row(&self, row: usize) -> Option<Vec<f64>> {
        (row < self.row_count).then(|| self.columns.iter().map(|c| c.normalized[row]).collect())
    }
}

/// A loaded dataset plus what ingestion threw away.
#[derive(Debug, Clone)]
pub struct LoadReport {
    pub dataset: Dataset,
    /// Rows dropped because a selected cell was missing or unparsable.
    pub dropped_rows: usize,
    /// Columns left out of an implicit (all-columns) selection because no cell
    /// in them parses as a number.
    pub skipped_columns: Vec<String>,
}

/// Loads a CSV file. The dataset is named after the file stem.
pub fn load_csv(
    path: impl AsRef<Path>,
    selected: Option<&[String]>,
) -> Result<LoadReport, DataError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => DataError::FileNotFound {
            path: path.display().to_string(),
        },
        _ => DataError::Io(e),
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_owned());
    read_csv(name, file, selected)
}

fn parse_cell(cell: &str) -> Option<f64> {
    let v: f64 = cell.trim().parse().ok()?;
    v.is_finite().then_some(v)
}

/// Reads CSV from any reader.
///
/// With an explicit `selected` list every named column must exist and hold
/// numbers; a column in which nothing parses is a [`DataError::NonNumericColumn`].
/// Without one, such columns are skipped and listed in the report. Either way a
/// row with a missing or unparsable cell in any kept column is dropped whole.
pub fn read_csv<R: Read>(
    name: impl Into<String>,
    reader: R,
    selected: Option<&[String]>,
) -> Result<LoadReport, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| DataError::Csv(e.to_string()))?
        .iter()
        .map(str::to_owned)
        .collect();

    let mut seen = HashSet::new();
    for h in &header {
        if h.is_empty() {
            return Err(DataError::EmptyColumnName);
        }
        if !seen.insert(h.as_str()) {
            return Err(DataError::DuplicateColumnName { name: h.clone() });
        }
    }

    let wanted: Vec<usize> = match selected {
        Some(names) => {
            let mut picked = HashSet::new();
            names
                .iter()
                .map(|n| {
                    if !picked.insert(n.as_str()) {
                        return Err(DataError::DuplicateColumnName { name: n.clone() });
                    }
                    header
                        .iter()
                        .position(|h| h == n)
                        .ok_or_else(|| DataError::UnknownColumn { name: n.clone() })
                })
                .collect::<Result<_, _>>()?
        }
        None => (0..header.len()).collect(),
    };

    let mut cells: Vec<Vec<Option<f64>>> = vec![Vec::new(); wanted.len()];
    let mut first_bad: Vec<Option<usize>> = vec![None; wanted.len()];
    let mut any_numeric = vec![false; wanted.len()];
    for (row, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| DataError::Csv(e.to_string()))?;
        for (k, &col) in wanted.iter().enumerate() {
            let cell = record.get(col).unwrap_or("");
            let parsed = parse_cell(cell);
            match parsed {
                Some(_) => any_numeric[k] = true,
                None if !cell.is_empty() && first_bad[k].is_none() => first_bad[k] = Some(row + 1),
                None => {}
            }
            cells[k].push(parsed);
        }
    }

    let mut keep = Vec::with_capacity(wanted.len());
    let mut skipped_columns = Vec::new();
    for k in 0..wanted.len() {
        if any_numeric[k] || cells[k].is_empty() {
            keep.push(k);
            continue;
        }
        let column = header[wanted[k]].clone();
        if selected.is_some() {
            return Err(DataError::NonNumericColumn {
                column,
                row: first_bad[k].unwrap_or(1),
            });
        }
        skipped_columns.push(column);
    }
    if keep.is_empty() {
        return Err(DataError::NoColumns);
    }

    let total_rows = cells[0].len();
    let complete: Vec<usize> = (0..total_rows)
        .filter(|&r| keep.iter().all(|&k| cells[k][r].is_some()))
        .collect();
    let dropped_rows = total_rows - complete.len();
    if complete.len() < MIN_ROWS {
        return Err(DataError::EmptyDataset {
            usable_rows: complete.len(),
        });
    }

    let columns = keep
        .iter()
        .map(|&k| {
            let raw = complete
                .iter()
                .map(|&r| cells[k][r].unwrap_or_default())
                .collect();
            Column::new(header[wanted[k]].clone(), raw)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(LoadReport {
        dataset: Dataset::new(name, columns)?,
        dropped_rows,
        skipped_columns,
    })
}
