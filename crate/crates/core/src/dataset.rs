//! Labeled tabular datasets: CSV loading, `[0,1]` scaling, stratified fold
//! plans and feature-subspace views selected by bit masks.
//!
//! A [`Dataset`] is immutable after construction and safe to share across
//! threads; every operation here is a pure function of its inputs plus an
//! explicit seed.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which CSV column holds the class label: a header name or a 0-based index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelColumn {
    Index(usize),
    Name(String),
}

impl Default for LabelColumn {
    fn default() -> Self {
        LabelColumn::Name("class".to_string())
    }
}

/// Immutable samples x features matrix with dense integer class labels.
///
/// Labels are `0..k` with every class present at least once; values are kept
/// row-major. Row or column subsets taken internally (fold training sets,
/// masked views) keep the original class table even when a class drops out
/// of the subset.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    values: Vec<f64>,
    n_samples: usize,
    n_features: usize,
    labels: Vec<usize>,
    feature_names: Vec<String>,
    class_names: Vec<String>,
}

impl Dataset {
    /// Validating constructor. `values` is row-major `n_samples * n_features`.
    pub fn new(
        values: Vec<f64>,
        n_features: usize,
        labels: Vec<usize>,
        feature_names: Vec<String>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        let n_samples = labels.len();
        if n_samples < 2 {
            return Err(Error::InvalidData(format!(
                "n_samples < 2 (got {n_samples})"
            )));
        }
        if n_features < 1 {
            return Err(Error::InvalidData("n_features < 1".to_string()));
        }
        if values.len() != n_samples * n_features {
            return Err(Error::InvalidData(format!(
                "value buffer has {} cells, expected {}",
                values.len(),
                n_samples * n_features
            )));
        }
        if feature_names.len() != n_features {
            return Err(Error::InvalidData(format!(
                "{} feature names for {} features",
                feature_names.len(),
                n_features
            )));
        }
        let mut seen = HashSet::new();
        for name in &feature_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::InvalidData(format!(
                    "duplicate feature name {name:?}"
                )));
            }
        }
        let k = class_names.len();
        if k < 2 {
            return Err(Error::InvalidData(format!(
                "fewer than 2 distinct classes (got {k})"
            )));
        }
        let mut present = vec![false; k];
        for (i, &label) in labels.iter().enumerate() {
            if label >= k {
                return Err(Error::InvalidData(format!(
                    "label {label} of sample {i} out of range 0..{k}"
                )));
            }
            present[label] = true;
        }
        if let Some(missing) = present.iter().position(|p| !p) {
            return Err(Error::InvalidData(format!(
                "class {} ({:?}) has no samples",
                missing, class_names[missing]
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("non-finite value".to_string()));
        }
        Ok(Dataset {
            values,
            n_samples,
            n_features,
            labels,
            feature_names,
            class_names,
        })
    }

    /// Load a dataset from a CSV file: header row with feature names, one row
    /// per sample, one label column. Labels are re-encoded to dense integers
    /// in order of first appearance; feature order follows column order.
    pub fn load_csv(path: impl AsRef<Path>, label_column: &LabelColumn) -> Result<Self> {
        let path = path.as_ref();
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| match e.kind() {
                csv::ErrorKind::Io(_) => Error::Io {
                    path: path.to_path_buf(),
                    source: std::io::Error::other(e.to_string()),
                },
                _ => Error::InvalidData(e.to_string()),
            })?;

        let headers: Vec<String> = reader
            .headers()
            .map_err(|e| Error::InvalidData(format!("bad header row: {e}")))?
            .iter()
            .map(|h| h.to_string())
            .collect();
        if headers.is_empty() {
            return Err(Error::InvalidData("empty header row".to_string()));
        }

        let label_idx = match label_column {
            LabelColumn::Index(i) => {
                if *i >= headers.len() {
                    return Err(Error::InvalidData(format!(
                        "label column index {} out of range ({} columns)",
                        i,
                        headers.len()
                    )));
                }
                *i
            }
            LabelColumn::Name(name) => headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| {
                    Error::InvalidData(format!("label column {name:?} not found in header"))
                })?,
        };

        let feature_names: Vec<String> = headers
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != label_idx)
            .map(|(_, h)| h.clone())
            .collect();

        let mut values = Vec::new();
        let mut labels = Vec::new();
        let mut class_names: Vec<String> = Vec::new();

        for (row_idx, record) in reader.records().enumerate() {
            let row = row_idx + 1;
            let record = record.map_err(|e| Error::Csv {
                path: path.to_path_buf(),
                row,
                column: "-".to_string(),
                message: e.to_string(),
            })?;
            if record.len() != headers.len() {
                return Err(Error::Csv {
                    path: path.to_path_buf(),
                    row,
                    column: "-".to_string(),
                    message: format!(
                        "ragged row: {} cells, header has {}",
                        record.len(),
                        headers.len()
                    ),
                });
            }
            for (col_idx, cell) in record.iter().enumerate() {
                if col_idx == label_idx {
                    let label = match class_names.iter().position(|c| c == cell) {
                        Some(id) => id,
                        None => {
                            class_names.push(cell.to_string());
                            class_names.len() - 1
                        }
                    };
                    labels.push(label);
                } else {
                    let value: f64 = cell.parse().map_err(|_| Error::Csv {
                        path: path.to_path_buf(),
                        row,
                        column: headers[col_idx].clone(),
                        message: format!("non-numeric cell {cell:?}"),
                    })?;
                    if !value.is_finite() {
                        return Err(Error::Csv {
                            path: path.to_path_buf(),
                            row,
                            column: headers[col_idx].clone(),
                            message: format!("non-finite cell {cell:?}"),
                        });
                    }
                    values.push(value);
                }
            }
        }

        Dataset::new(values, feature_names.len(), labels, feature_names, class_names)
    }

    /// Write the dataset back out as CSV (label column named `class`).
    /// Values use the shortest representation that parses back exactly, so
    /// `load_csv` after `write_csv` reproduces the dataset bit for bit.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::new();
        for name in &self.feature_names {
            out.push_str(name);
            out.push(',');
        }
        out.push_str("class\n");
        for i in 0..self.n_samples {
            for v in self.row(i) {
                let _ = write!(out, "{v},");
            }
            out.push_str(&self.class_names[self.labels[i]]);
            out.push('\n');
        }
        std::fs::write(path, out).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Number of classes in the class table (fixed across views).
    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn value(&self, sample: usize, feature: usize) -> f64 {
        self.values[sample * self.n_features + feature]
    }

    /// Copy of feature column `j`.
    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_samples).map(|i| self.value(i, j)).collect()
    }

    /// Per-feature linear rescale to `[0,1]`: `x' = (x - min) / (max - min)`.
    /// Constant features map to 0.0. Idempotent: scaling a scaled dataset
    /// reproduces it exactly.
    pub fn min_max_scale(&self) -> Dataset {
        let mut scaled = self.clone();
        for j in 0..self.n_features {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for i in 0..self.n_samples {
                let v = self.value(i, j);
                lo = lo.min(v);
                hi = hi.max(v);
            }
            let range = hi - lo;
            for i in 0..self.n_samples {
                let cell = &mut scaled.values[i * self.n_features + j];
                *cell = if range == 0.0 { 0.0 } else { (*cell - lo) / range };
            }
        }
        scaled
    }

    /// Keep exactly the columns where `mask` is set, in original order.
    /// Labels and the class table are untouched; an all-zero mask yields a
    /// zero-feature view (fitness evaluators treat that as accuracy 0).
    pub fn apply_mask(&self, mask: &FeatureMask) -> Result<Dataset> {
        if mask.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                got: mask.len(),
            });
        }
        let kept: Vec<usize> = mask.indices();
        let mut values = Vec::with_capacity(self.n_samples * kept.len());
        for i in 0..self.n_samples {
            let row = self.row(i);
            for &j in &kept {
                values.push(row[j]);
            }
        }
        Ok(Dataset {
            values,
            n_samples: self.n_samples,
            n_features: kept.len(),
            labels: self.labels.clone(),
            feature_names: kept.iter().map(|&j| self.feature_names[j].clone()).collect(),
            class_names: self.class_names.clone(),
        })
    }

    /// Row subset in the given order. Keeps the full class table, so classes
    /// may be absent from the subset (fold training sets rely on this).
    pub(crate) fn select_rows(&self, indices: &[usize]) -> Dataset {
        let mut values = Vec::with_capacity(indices.len() * self.n_features);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            values.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Dataset {
            values,
            n_samples: indices.len(),
            n_features: self.n_features,
            labels,
            feature_names: self.feature_names.clone(),
            class_names: self.class_names.clone(),
        }
    }

    /// Stratified fold assignment: per class, per-fold counts differ by at
    /// most one, and every fold is non-empty. Deterministic for a fixed seed.
    pub fn stratified_kfold(&self, k_folds: usize, rng_seed: u64) -> Result<FoldPlan> {
        if k_folds < 2 {
            return Err(Error::InvalidParam(format!("fold count {k_folds} < 2")));
        }
        if k_folds > self.n_samples {
            return Err(Error::InvalidParam(format!(
                "fold count {} exceeds sample count {}",
                k_folds, self.n_samples
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); self.n_classes()];
        for (i, &label) in self.labels.iter().enumerate() {
            by_class[label].push(i);
        }
        let mut assignments = vec![0usize; self.n_samples];
        // One global fold cursor carried across classes keeps overall fold
        // sizes within one of each other, so no fold can end up empty.
        let mut cursor = 0usize;
        for group in &mut by_class {
            group.shuffle(&mut rng);
            for &sample in group.iter() {
                assignments[sample] = cursor % k_folds;
                cursor += 1;
            }
        }
        Ok(FoldPlan {
            assignments,
            k_folds,
        })
    }
}

/// Fixed-length bit vector selecting a feature subspace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureMask {
    bits: Vec<bool>,
}

impl FeatureMask {
    pub fn from_bits(bits: Vec<bool>) -> Self {
        FeatureMask { bits }
    }

    pub fn zeros(len: usize) -> Self {
        FeatureMask {
            bits: vec![false; len],
        }
    }

    pub fn ones(len: usize) -> Self {
        FeatureMask {
            bits: vec![true; len],
        }
    }

    /// Mask with the given indices set.
    pub fn from_indices(len: usize, indices: &[usize]) -> Self {
        let mut bits = vec![false; len];
        for &i in indices {
            bits[i] = true;
        }
        FeatureMask { bits }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn set(&mut self, i: usize, value: bool) {
        self.bits[i] = value;
    }

    pub fn flip(&mut self, i: usize) {
        self.bits[i] = !self.bits[i];
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Number of selected features.
    pub fn popcount(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Indices of selected features, ascending.
    pub fn indices(&self) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| i)
            .collect()
    }

    /// Bitwise AND with another mask of the same length.
    pub fn and(&self, other: &FeatureMask) -> FeatureMask {
        debug_assert_eq!(self.len(), other.len());
        FeatureMask {
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(&a, &b)| a && b)
                .collect(),
        }
    }

    /// Embed a mask over a kept-index subspace back into `dim` positions.
    pub fn lift_to(&self, kept: &[usize], dim: usize) -> FeatureMask {
        debug_assert_eq!(self.len(), kept.len());
        let mut bits = vec![false; dim];
        for (local, &original) in kept.iter().enumerate() {
            if self.bits[local] {
                bits[original] = true;
            }
        }
        FeatureMask { bits }
    }

    /// Compact `10011`-style rendering, useful in traces and tests.
    pub fn to_bitstring(&self) -> String {
        self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }
}

impl std::fmt::Display for FeatureMask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.to_bitstring())
    }
}

/// Assignment of every sample to one of `k_folds` folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    assignments: Vec<usize>,
    k_folds: usize,
}

impl FoldPlan {
    pub fn k_folds(&self) -> usize {
        self.k_folds
    }

    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        self.assignments
            .iter()
            .enumerate()
            .filter(|(_, &f)| f == fold)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        self.assignments
            .iter()
            .enumerate()
            .filter(|(_, &f)| f != fold)
            .map(|(i, _)| i)
            .collect()
    }
}
