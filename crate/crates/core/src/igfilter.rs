//! Information-gain feature ranking on discretized columns.
//!
//! Gain is measured in bits (log base 2): the class entropy of the whole
//! sample set minus the size-weighted entropy of the subsets induced by a
//! feature's bins. Features whose gain clears a threshold survive the filter,
//! ranked by descending gain.

use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// A feature column mapped to integer bins `0..v`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscretizedColumn {
    bin_ids: Vec<usize>,
    v: usize,
}

impl DiscretizedColumn {
    pub fn new(bin_ids: Vec<usize>, v: usize) -> Result<Self> {
        if v < 1 {
            return Err(Error::InvalidParam("bin count < 1".to_string()));
        }
        if let Some(&bad) = bin_ids.iter().find(|&&b| b >= v) {
            return Err(Error::InvalidParam(format!("bin id {bad} >= bin count {v}")));
        }
        Ok(DiscretizedColumn { bin_ids, v })
    }

    pub fn bin_ids(&self) -> &[usize] {
        &self.bin_ids
    }

    pub fn bin_count(&self) -> usize {
        self.v
    }

    pub fn len(&self) -> usize {
        self.bin_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bin_ids.is_empty()
    }
}

/// Equal-width binning of a `[0,1]` column: `bin = floor(x * v)`, with the top
/// edge x = 1.0 assigned to bin `v - 1`.
pub fn discretize_equal_width(column: &[f64], v: usize) -> Result<DiscretizedColumn> {
    if v < 1 {
        return Err(Error::InvalidParam("bin count < 1".to_string()));
    }
    let bin_ids = column
        .iter()
        .map(|&x| {
            debug_assert!((0.0..=1.0).contains(&x), "value {x} outside [0,1]");
            ((x * v as f64).floor() as usize).min(v - 1)
        })
        .collect();
    Ok(DiscretizedColumn { bin_ids, v })
}

/// Class entropy in bits: `-sum p_c log2 p_c` over classes present in the
/// label vector. Absent classes contribute nothing.
pub fn class_entropy(labels: &[usize]) -> Result<f64> {
    if labels.is_empty() {
        return Err(Error::EmptyInput("class_entropy on empty label vector"));
    }
    let mut counts = vec![0usize; labels.iter().max().unwrap() + 1];
    for &label in labels {
        counts[label] += 1;
    }
    Ok(entropy_of_counts(&counts, labels.len()))
}

fn entropy_of_counts(counts: &[usize], total: usize) -> f64 {
    let n = total as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

/// Size-weighted entropy of the label subsets induced by the bins:
/// `sum_i (|S_i| / |S|) * Info(S_i)`. Empty bins contribute nothing.
pub fn conditional_entropy(col: &DiscretizedColumn, labels: &[usize]) -> Result<f64> {
    if col.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            got: col.len(),
        });
    }
    if labels.is_empty() {
        return Err(Error::EmptyInput("conditional_entropy on empty label vector"));
    }
    let k = labels.iter().max().unwrap() + 1;
    let mut counts = vec![vec![0usize; k]; col.bin_count()];
    let mut sizes = vec![0usize; col.bin_count()];
    for (&bin, &label) in col.bin_ids().iter().zip(labels) {
        counts[bin][label] += 1;
        sizes[bin] += 1;
    }
    let n = labels.len() as f64;
    Ok(counts
        .iter()
        .zip(&sizes)
        .filter(|(_, &size)| size > 0)
        .map(|(bin_counts, &size)| (size as f64 / n) * entropy_of_counts(bin_counts, size))
        .sum())
}

/// Entropy reduction from partitioning on the column's bins, clamped to be
/// non-negative (floating error can otherwise leave a tiny negative).
pub fn info_gain(col: &DiscretizedColumn, labels: &[usize]) -> Result<f64> {
    let gain = class_entropy(labels)? - conditional_entropy(col, labels)?;
    Ok(gain.max(0.0))
}

/// Per-feature gains plus the indices that cleared the threshold, sorted by
/// descending gain (ties by ascending feature index).
#[derive(Debug, Clone, PartialEq)]
pub struct IgRanking {
    gains: Vec<f64>,
    selected: Vec<usize>,
    threshold: f64,
}

impl IgRanking {
    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    /// Indices with gain strictly above the threshold, best first.
    pub fn selected(&self) -> &[usize] {
        &self.selected
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// All feature indices ranked by descending gain, ties by ascending index.
    pub fn ranked_indices(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.gains.len()).collect();
        sort_by_gain(&mut order, &self.gains);
        order
    }

    /// The `m` best-ranked feature indices regardless of threshold.
    pub fn top_m(&self, m: usize) -> Vec<usize> {
        let mut order = self.ranked_indices();
        order.truncate(m);
        order
    }

    /// Dump `feature_index,feature_name,gain` rows in ranking order.
    pub fn write_csv<W: std::io::Write>(&self, names: &[String], mut out: W) -> Result<()> {
        let io_err = |source: std::io::Error| Error::Io {
            path: "<ranking dump>".into(),
            source,
        };
        writeln!(out, "feature_index,feature_name,gain").map_err(io_err)?;
        for j in self.ranked_indices() {
            writeln!(out, "{},{},{:.12}", j, names[j], self.gains[j]).map_err(io_err)?;
        }
        Ok(())
    }
}

fn sort_by_gain(order: &mut [usize], gains: &[f64]) {
    order.sort_by(|&a, &b| {
        gains[b]
            .partial_cmp(&gains[a])
            .expect("gains are finite")
            .then(a.cmp(&b))
    });
}

/// Rank every feature of a scaled dataset by information gain under
/// equal-width binning and keep those strictly above `threshold`.
///
/// Columns are scored independently (in parallel); there is no reduction
/// across features, so results are identical for any evaluation order.
pub fn rank_and_filter(d: &Dataset, v: usize, threshold: f64) -> Result<IgRanking> {
    if v < 1 {
        return Err(Error::InvalidParam("bin count < 1".to_string()));
    }
    let gains: Vec<f64> = (0..d.n_features())
        .into_par_iter()
        .map(|j| {
            let col = discretize_equal_width(&d.column(j), v)?;
            info_gain(&col, d.labels())
        })
        .collect::<Result<_>>()?;
    let mut selected: Vec<usize> = (0..gains.len())
        .filter(|&j| gains[j] > threshold)
        .collect();
    sort_by_gain(&mut selected, &gains);
    Ok(IgRanking {
        gains,
        selected,
        threshold,
    })
}
