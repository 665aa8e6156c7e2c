//! Z-score outlier filtering and standardization. Both use population
//! statistics (divide by n).

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Per-column population mean and standard deviation, two-pass.
pub fn column_stats(x: &Matrix) -> (Vec<f64>, Vec<f64>) {
    let n = x.rows() as f64;
    let d = x.cols();
    let mut mean = alloc::vec![0.0; d];
    for r in x.iter_rows() {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = alloc::vec![0.0; d];
    for r in x.iter_rows() {
        for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
            let dv = v - m;
            *s += dv * dv;
        }
    }
    let std = var.into_iter().map(|s| libm::sqrt(s / n)).collect();
    (mean, std)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierReport {
    pub threshold: f64,
    pub rows_removed: usize,
    /// Indexed by class.
    pub removed_per_class: Vec<usize>,
    /// Indices (into the input) of the rows that were kept.
    #[serde(skip)]
    pub kept_rows: Vec<usize>,
}

/// Drops every row with some feature whose z-score magnitude reaches
/// `threshold` (rows with `|z| < threshold` on all features survive).
/// Zero-variance features never trigger removal.
pub fn remove_outliers_zscore(ds: &Dataset, threshold: f64) -> Result<(Dataset, OutlierReport)> {
    if !(threshold > 0.0 && threshold.is_finite()) {
        return Err(Error::InvalidParameter(alloc::format!("z threshold {threshold} must be positive")));
    }
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let (mean, std) = column_stats(ds.x());
    let mut kept = Vec::with_capacity(ds.n_rows());
    let mut removed_per_class = alloc::vec![0; ds.n_classes()];
    for (i, row) in ds.x().iter_rows().enumerate() {
        let outlier = row
            .iter()
            .zip(mean.iter().zip(&std))
            .any(|(v, (m, s))| *s > 0.0 && libm::fabs(v - m) / s >= threshold);
        if outlier {
            removed_per_class[ds.y()[i]] += 1;
        } else {
            kept.push(i);
        }
    }
    if kept.is_empty() {
        return Err(Error::AllRowsRemoved { threshold });
    }
    let report = OutlierReport {
        threshold,
        rows_removed: ds.n_rows() - kept.len(),
        removed_per_class,
        kept_rows: kept.clone(),
    };
    Ok((ds.subset(&kept), report))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(ds: &Dataset) -> Result<Self> {
        if ds.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let (mean, std) = column_stats(ds.x());
        Ok(Standardizer { mean, std })
    }

    pub fn n_features(&self) -> usize {
        self.mean.len()
    }

    /// `(x - mean) / std` per column; zero-variance columns map to 0.
    pub fn transform(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.n_features() {
            return Err(Error::DimensionMismatch { expected: self.n_features(), found: x.cols() });
        }
        let mut out = x.clone();
        for i in 0..out.rows() {
            for ((v, m), s) in out.row_mut(i).iter_mut().zip(&self.mean).zip(&self.std) {
                *v = if *s > 0.0 { (*v - m) / s } else { 0.0 };
            }
        }
        Ok(out)
    }

    pub fn apply(&self, ds: &Dataset) -> Result<Dataset> {
        ds.with_rows(self.transform(ds.x())?, ds.y().to_vec())
    }

    /// Restricts to a subset of columns (after feature selection).
    pub fn select(&self, cols: &[usize]) -> Standardizer {
        Standardizer {
            mean: cols.iter().map(|&j| self.mean[j]).collect(),
            std: cols.iter().map(|&j| self.std[j]).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::{String, ToString};
    use alloc::vec;

    fn column_ds(cols: &[Vec<f64>], y: Vec<usize>, n_classes: usize) -> Dataset {
        let n = cols[0].len();
        let rows: Vec<Vec<f64>> = (0..n).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
        let names: Vec<String> = (0..cols.len()).map(|j| alloc::format!("f{j}")).collect();
        let classes = (0..n_classes).map(|c| c.to_string()).collect();
        Dataset::new(Matrix::from_rows(&rows).unwrap(), y, names, classes).unwrap()
    }

    #[test]
    fn constant_data_keeps_everything() {
        let ds = column_ds(&[vec![3.0; 8], vec![-1.0; 8]], vec![0; 8], 1);
        let (out, rep) = remove_outliers_zscore(&ds, 0.5).unwrap();
        assert_eq!(out.n_rows(), 8);
        assert_eq!(rep.rows_removed, 0);
    }

    #[test]
    fn lone_spike_is_removed() {
        let mut col = vec![1.0; 9];
        col.push(50.0);
        let ds = column_ds(&[col], vec![0, 0, 0, 0, 0, 1, 1, 1, 1, 1], 2);
        let (out, rep) = remove_outliers_zscore(&ds, 3.0).unwrap();
        assert_eq!(rep.kept_rows, (0..9).collect::<Vec<_>>());
        assert_eq!(rep.removed_per_class, vec![0, 1]);
        assert_eq!(out.n_features(), 1);
        assert_eq!(rep.rows_removed, rep.removed_per_class.iter().sum::<usize>());
    }

    #[test]
    fn aggressive_threshold_errors() {
        let ds = column_ds(&[vec![0.0, 1.0]], vec![0, 0], 1);
        assert_eq!(remove_outliers_zscore(&ds, 0.5).unwrap_err(), Error::AllRowsRemoved { threshold: 0.5 });
        assert!(remove_outliers_zscore(&ds, 0.0).is_err());
    }

    #[test]
    fn fit_and_apply_small_column() {
        let ds = column_ds(&[vec![2.0, 4.0, 6.0], vec![5.0; 3]], vec![0; 3], 1);
        let s = Standardizer::fit(&ds).unwrap();
        assert_eq!(s.mean, vec![4.0, 5.0]);
        assert!((s.std[0] - libm::sqrt(8.0 / 3.0)).abs() < 1e-15);
        assert_eq!(s.std[1], 0.0);
        let out = s.apply(&ds).unwrap();
        let r = libm::sqrt(1.5);
        for (got, want) in out.x().column(0).iter().zip([-r, 0.0, r]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert_eq!(out.x().column(1), vec![0.0; 3]);
        assert!(s.transform(&Matrix::zeros(1, 3)).is_err());
    }
}
