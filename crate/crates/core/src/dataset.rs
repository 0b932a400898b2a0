//! CSV ingestion and the in-memory dataset: a row-major feature matrix with
//! either integer class labels (plus a label dictionary) or real regression
//! targets.
//!
//! The interchange format is plain UTF-8 CSV: comma separators, `.` decimal,
//! optional header row, label in the last column by default. Features are
//! written with Rust's shortest round-trip float formatting, so a
//! load -> save -> load cycle reproduces the matrix exactly.

use crate::geometry::PointStore;
use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },
    #[error("{path}: no data rows")]
    Empty { path: String },
    #[error("label column {name:?} not found in header")]
    LabelColumnMissing { name: String },
    #[error("dataset has {got} rows but {expected} targets")]
    LengthMismatch { expected: usize, got: usize },
}

/// Targets for the two task kinds.
#[derive(Debug, Clone, PartialEq)]
pub enum Targets {
    /// Dense class ids; the dictionary mapping ids back to the original
    /// tokens lives in [`Dataset::label_names`].
    Labels(Vec<usize>),
    Values(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: PointStore,
    pub targets: Targets,
    /// Dense label id -> original token. Empty for regression data.
    pub label_names: Vec<String>,
    pub feature_names: Option<Vec<String>>,
}

impl Dataset {
    pub fn new_classification(
        features: PointStore,
        labels: Vec<usize>,
        label_names: Vec<String>,
    ) -> Self {
        assert_eq!(features.len(), labels.len());
        Self { features, targets: Targets::Labels(labels), label_names, feature_names: None }
    }

    pub fn new_regression(features: PointStore, values: Vec<f64>) -> Self {
        assert_eq!(features.len(), values.len());
        Self { features, targets: Targets::Values(values), label_names: Vec::new(), feature_names: None }
    }

    pub fn n_rows(&self) -> usize {
        self.features.len()
    }

    pub fn n_features(&self) -> usize {
        self.features.dim()
    }

    pub fn labels(&self) -> Option<&[usize]> {
        match &self.targets {
            Targets::Labels(l) => Some(l),
            Targets::Values(_) => None,
        }
    }

    pub fn values(&self) -> Option<&[f64]> {
        match &self.targets {
            Targets::Values(v) => Some(v),
            Targets::Labels(_) => None,
        }
    }

    pub fn n_classes(&self) -> usize {
        self.label_names.len()
    }

    /// Row indices per class id.
    pub fn class_indices(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.n_classes()];
        if let Some(labels) = self.labels() {
            for (row, &l) in labels.iter().enumerate() {
                groups[l].push(row);
            }
        }
        groups
    }

    /// Copies the given rows into a new dataset (targets included).
    pub fn subset(&self, rows: &[usize]) -> Self {
        let mut features = PointStore::with_capacity(self.n_features(), rows.len());
        for &r in rows {
            features.push(self.features.point(r));
        }
        let targets = match &self.targets {
            Targets::Labels(l) => Targets::Labels(rows.iter().map(|&r| l[r]).collect()),
            Targets::Values(v) => Targets::Values(rows.iter().map(|&r| v[r]).collect()),
        };
        Self {
            features,
            targets,
            label_names: self.label_names.clone(),
            feature_names: self.feature_names.clone(),
        }
    }
}

/// Which column holds the target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    Last,
    Name(String),
}

#[derive(Debug, Clone)]
pub struct CsvSchema {
    pub has_header: bool,
    pub label_column: LabelColumn,
    /// Parse the target as a real value instead of a class token.
    pub regression: bool,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self { has_header: false, label_column: LabelColumn::Last, regression: false }
    }
}

/// Loads a CSV into a [`Dataset`]. Class tokens are mapped to dense ids in a
/// deterministic order: numerically when every token parses as a number,
/// lexicographically otherwise. Rows with non-finite or malformed cells are
/// rejected with their line number.
pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Dataset, DataError> {
    let path_str = path.as_ref().display().to_string();
    let io_err = |source| DataError::Io { path: path_str.clone(), source };
    let content = std::fs::read_to_string(path.as_ref()).map_err(io_err)?;

    let mut lines = content
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());

    let mut feature_names = None;
    let mut label_idx: Option<usize> = None;
    if schema.has_header {
        let (line_no, header) = lines.next().ok_or_else(|| DataError::Empty { path: path_str.clone() })?;
        let names: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
        if let LabelColumn::Name(want) = &schema.label_column {
            label_idx = Some(
                names
                    .iter()
                    .position(|n| n == want)
                    .ok_or_else(|| DataError::LabelColumnMissing { name: want.clone() })?,
            );
        }
        let _ = line_no;
        feature_names = Some(names);
    } else if let LabelColumn::Name(want) = &schema.label_column {
        return Err(DataError::LabelColumnMissing { name: want.clone() });
    }

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut raw_targets: Vec<String> = Vec::new();
    let mut width: Option<usize> = None;
    for (line_no, line) in lines {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() < 2 {
            return Err(DataError::Parse {
                path: path_str.clone(),
                line: line_no,
                message: format!("expected at least 2 columns, found {}", cells.len()),
            });
        }
        match width {
            None => width = Some(cells.len()),
            Some(w) if w != cells.len() => {
                return Err(DataError::Parse {
                    path: path_str.clone(),
                    line: line_no,
                    message: format!("expected {w} columns, found {}", cells.len()),
                })
            }
            _ => {}
        }
        let target_col = label_idx.unwrap_or(cells.len() - 1);
        let mut features = Vec::with_capacity(cells.len() - 1);
        for (col, cell) in cells.iter().enumerate() {
            if col == target_col {
                raw_targets.push((*cell).to_string());
                continue;
            }
            let value: f64 = cell.parse().map_err(|_| DataError::Parse {
                path: path_str.clone(),
                line: line_no,
                message: format!("column {}: not a number: {cell:?}", col + 1),
            })?;
            if !value.is_finite() {
                return Err(DataError::Parse {
                    path: path_str.clone(),
                    line: line_no,
                    message: format!("column {}: non-finite value {cell:?}", col + 1),
                });
            }
            features.push(value);
        }
        rows.push(features);
    }
    if rows.is_empty() {
        return Err(DataError::Empty { path: path_str.clone() });
    }

    let dim = rows[0].len();
    let features = PointStore::from_rows(&rows, dim);
    let feature_names = feature_names.map(|mut names| {
        let target_col = label_idx.unwrap_or(names.len() - 1);
        names.remove(target_col);
        names
    });

    if schema.regression {
        let mut values = Vec::with_capacity(raw_targets.len());
        for (row, t) in raw_targets.iter().enumerate() {
            let v: f64 = t.parse().map_err(|_| DataError::Parse {
                path: path_str.clone(),
                line: row + 1 + usize::from(schema.has_header),
                message: format!("target is not a number: {t:?}"),
            })?;
            if !v.is_finite() {
                return Err(DataError::Parse {
                    path: path_str.clone(),
                    line: row + 1 + usize::from(schema.has_header),
                    message: format!("non-finite target {t:?}"),
                });
            }
            values.push(v);
        }
        let mut ds = Dataset::new_regression(features, values);
        ds.feature_names = feature_names;
        Ok(ds)
    } else {
        let (labels, label_names) = densify_labels(&raw_targets);
        let mut ds = Dataset::new_classification(features, labels, label_names);
        ds.feature_names = feature_names;
        Ok(ds)
    }
}

/// Maps raw class tokens to dense ids with a deterministic dictionary order.
fn densify_labels(raw: &[String]) -> (Vec<usize>, Vec<String>) {
    let unique: BTreeSet<&String> = raw.iter().collect();
    let mut names: Vec<String> = unique.into_iter().cloned().collect();
    let all_numeric: Option<Vec<f64>> =
        names.iter().map(|n| n.parse::<f64>().ok().filter(|v| v.is_finite())).collect();
    if let Some(values) = all_numeric {
        let mut order: Vec<usize> = (0..names.len()).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        names = order.iter().map(|&i| names[i].clone()).collect();
    }
    let index: std::collections::HashMap<&str, usize> =
        names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let labels = raw.iter().map(|t| index[t.as_str()]).collect();
    (labels, names)
}

/// Writes a dataset back to CSV with round-trip-exact float formatting.
pub fn save_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<(), DataError> {
    let path_str = path.as_ref().display().to_string();
    let mut out = String::new();
    if let Some(names) = &dataset.feature_names {
        out.push_str(&names.join(","));
        out.push_str(",target\n");
    }
    for (row, p) in dataset.features.iter().enumerate() {
        for x in p {
            let _ = write!(out, "{x},");
        }
        match &dataset.targets {
            Targets::Labels(l) => {
                let _ = writeln!(out, "{}", dataset.label_names[l[row]]);
            }
            Targets::Values(v) => {
                let _ = writeln!(out, "{}", v[row]);
            }
        }
    }
    std::fs::write(path.as_ref(), out).map_err(|source| DataError::Io { path: path_str, source })
}
