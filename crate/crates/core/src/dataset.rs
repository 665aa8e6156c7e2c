//! Tabular ingestion model, label encoding and stratified splitting.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{rng_for, STREAM_SPLIT};

/// Raw string cells with a header. Row numbers in errors are 1-based data
/// records (the header is not counted).
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl RawTable {
    pub fn new(header: Vec<String>, rows: Vec<Vec<String>>) -> Result<Self> {
        if header.is_empty() {
            return Err(Error::EmptyTable);
        }
        for (i, h) in header.iter().enumerate() {
            if header[..i].contains(h) {
                return Err(Error::DuplicateColumn(h.clone()));
            }
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() != header.len() {
                return Err(Error::RaggedRow { row: i + 1, found: r.len(), expected: header.len() });
            }
        }
        Ok(RawTable { header, rows })
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    /// Removes the named columns. Every name must exist.
    pub fn drop_columns(&mut self, names: &[String]) -> Result<()> {
        let mut drop: Vec<usize> = names.iter().map(|n| self.column_index(n)).collect::<Result<_>>()?;
        drop.sort_unstable();
        drop.dedup();
        for &j in drop.iter().rev() {
            self.header.remove(j);
            for r in &mut self.rows {
                r.remove(j);
            }
        }
        Ok(())
    }
}

/// Maps category strings to their rank in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelEncoder {
    categories: Vec<String>,
}

impl LabelEncoder {
    pub fn fit<'a, I: IntoIterator<Item = &'a str>>(values: I) -> Self {
        let mut categories: Vec<String> = values.into_iter().map(ToString::to_string).collect();
        categories.sort_unstable();
        categories.dedup();
        LabelEncoder { categories }
    }

    pub fn from_categories(mut categories: Vec<String>) -> Self {
        categories.sort_unstable();
        categories.dedup();
        LabelEncoder { categories }
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn len(&self) -> usize {
        self.categories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }

    pub fn encode(&self, value: &str) -> Option<usize> {
        self.categories.binary_search_by(|c| c.as_str().cmp(value)).ok()
    }

    pub fn decode(&self, code: usize) -> Option<&str> {
        self.categories.get(code).map(String::as_str)
    }
}

/// Dense numeric features with class labels in `[0, C)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    x: Matrix,
    y: Vec<usize>,
    feature_names: Vec<String>,
    class_names: Vec<String>,
}

impl Dataset {
    /// Validates every invariant: shapes agree, labels in range, all cells finite.
    pub fn new(x: Matrix, y: Vec<usize>, feature_names: Vec<String>, class_names: Vec<String>) -> Result<Self> {
        if x.rows() != y.len() {
            return Err(Error::DimensionMismatch { expected: x.rows(), found: y.len() });
        }
        if x.cols() != feature_names.len() {
            return Err(Error::DimensionMismatch { expected: x.cols(), found: feature_names.len() });
        }
        if class_names.is_empty() {
            return Err(Error::InvalidParameter("at least one class name is required".into()));
        }
        if let Some(&label) = y.iter().find(|&&l| l >= class_names.len()) {
            return Err(Error::LabelOutOfRange { label, n_classes: class_names.len() });
        }
        if let Some((row, column)) = x.find_non_finite() {
            return Err(Error::NonFinite { row, column });
        }
        Ok(Dataset { x, y, feature_names, class_names })
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn y(&self) -> &[usize] {
        &self.y
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn n_rows(&self) -> usize {
        self.y.len()
    }

    pub fn n_features(&self) -> usize {
        self.x.cols()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        class_counts(&self.y, self.n_classes())
    }

    /// Row indices grouped by class, ascending within each class.
    pub fn class_indices(&self) -> Vec<Vec<usize>> {
        class_indices(&self.y, self.n_classes())
    }

    /// Rows in the given order; indices may repeat.
    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select_rows(idx),
            y: idx.iter().map(|&i| self.y[i]).collect(),
            feature_names: self.feature_names.clone(),
            class_names: self.class_names.clone(),
        }
    }

    pub fn select_features(&self, cols: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select_cols(cols),
            y: self.y.clone(),
            feature_names: cols.iter().map(|&j| self.feature_names[j].clone()).collect(),
            class_names: self.class_names.clone(),
        }
    }

    /// Same features and classes, new rows.
    pub fn with_rows(&self, x: Matrix, y: Vec<usize>) -> Result<Dataset> {
        Dataset::new(x, y, self.feature_names.clone(), self.class_names.clone())
    }

    /// Re-runs the invariant scan.
    pub fn validate(&self) -> Result<()> {
        Dataset::new(self.x.clone(), self.y.clone(), self.feature_names.clone(), self.class_names.clone()).map(|_| ())
    }
}

pub fn class_counts(y: &[usize], n_classes: usize) -> Vec<usize> {
    let mut counts = alloc::vec![0usize; n_classes];
    for &c in y {
        counts[c] += 1;
    }
    counts
}

pub fn class_indices(y: &[usize], n_classes: usize) -> Vec<Vec<usize>> {
    let mut groups = alloc::vec![Vec::new(); n_classes];
    for (i, &c) in y.iter().enumerate() {
        groups[c].push(i);
    }
    groups
}

/// Encoders fitted during [`encode`], reusable on new tables with the same schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureEncoding {
    pub feature_names: Vec<String>,
    pub categorical: BTreeMap<String, LabelEncoder>,
    pub target_column: String,
    pub target: LabelEncoder,
}

fn parse_cell(value: &str, row: usize, column: &str) -> Result<f64> {
    value
        .trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::UnparseableCell { row, column: column.to_string(), value: value.to_string() })
}

/// Turns a raw table into a numeric dataset. Categorical feature columns and
/// the target are label-encoded in lexicographic order; every other column
/// must parse as a finite real.
pub fn encode(table: &RawTable, target_column: &str, categorical_columns: &[String]) -> Result<(Dataset, FeatureEncoding)> {
    if table.n_rows() == 0 {
        return Err(Error::EmptyTable);
    }
    let target_idx = table.column_index(target_column)?;
    for c in categorical_columns {
        table.column_index(c)?;
    }
    let target = LabelEncoder::fit(table.rows().iter().map(|r| r[target_idx].as_str()));

    let mut categorical = BTreeMap::new();
    for name in categorical_columns.iter().filter(|c| c.as_str() != target_column) {
        let j = table.column_index(name)?;
        let enc = LabelEncoder::fit(table.rows().iter().map(|r| r[j].as_str()));
        categorical.insert(name.clone(), enc);
    }
    let feature_names: Vec<String> = table.header().iter().filter(|h| h.as_str() != target_column).cloned().collect();
    if feature_names.is_empty() {
        return Err(Error::InvalidParameter("no feature columns besides the target".into()));
    }
    let encoding = FeatureEncoding { feature_names, categorical, target_column: target_column.to_string(), target };
    let x = encoding.transform_features(table)?;
    let y = table
        .rows()
        .iter()
        .map(|r| encoding.target.encode(&r[target_idx]).expect("target encoder fitted on these rows"))
        .collect();
    let ds = Dataset::new(x, y, encoding.feature_names.clone(), encoding.target.categories().to_vec())?;
    Ok((ds, encoding))
}

impl FeatureEncoding {
    /// Encodes the feature columns of `table` (located by name, so column order
    /// and extra columns do not matter).
    pub fn transform_features(&self, table: &RawTable) -> Result<Matrix> {
        let cols: Vec<usize> = self.feature_names.iter().map(|n| table.column_index(n)).collect::<Result<_>>()?;
        let encoders: Vec<Option<&LabelEncoder>> = self.feature_names.iter().map(|n| self.categorical.get(n)).collect();
        let mut data = Vec::with_capacity(table.n_rows() * cols.len());
        for (i, r) in table.rows().iter().enumerate() {
            for ((&j, enc), name) in cols.iter().zip(&encoders).zip(&self.feature_names) {
                let cell = &r[j];
                let v = match enc {
                    Some(enc) => enc
                        .encode(cell)
                        .ok_or_else(|| Error::UnknownCategory { column: name.clone(), value: cell.clone() })?
                        as f64,
                    None => {
                        if cell.trim().is_empty() {
                            return Err(Error::UnparseableCell { row: i + 1, column: name.clone(), value: cell.clone() });
                        }
                        parse_cell(cell, i + 1, name)?
                    }
                };
                data.push(v);
            }
        }
        Matrix::new(table.n_rows(), cols.len(), data)
    }

    /// Encodes the target column of `table`, if present.
    pub fn transform_labels(&self, table: &RawTable) -> Result<Option<Vec<usize>>> {
        let Ok(j) = table.column_index(&self.target_column) else {
            return Ok(None);
        };
        table
            .rows()
            .iter()
            .map(|r| {
                self.target
                    .encode(&r[j])
                    .ok_or_else(|| Error::UnknownCategory { column: self.target_column.clone(), value: r[j].clone() })
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }
}

/// Train/test partition of a parent dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitPair {
    pub train: Dataset,
    pub test: Dataset,
    /// Parent row indices of each side, ascending.
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
    pub test_fraction: f64,
    pub seed: u64,
}

/// Number of test rows for a class of `n` rows: `floor(n * fraction)`,
/// always leaving at least one row for training.
pub fn test_count(n: usize, fraction: f64) -> usize {
    // 1e-9 absorbs representation error such as 10 * 0.7 = 6.999...
    let t = libm::floor(n as f64 * fraction + 1e-9) as usize;
    t.min(n.saturating_sub(1))
}

/// Per class, a seeded shuffle sends `floor(n_c * test_fraction)` rows to the
/// test side and the rest to training. Both sides keep parent row order.
pub fn stratified_split(ds: &Dataset, test_fraction: f64, seed: u64) -> Result<SplitPair> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidParameter(alloc::format!("test fraction {test_fraction} not in (0, 1)")));
    }
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut test_rows = Vec::new();
    for (c, mut rows) in ds.class_indices().into_iter().enumerate() {
        let mut rng = rng_for(seed, &[STREAM_SPLIT, c as u64]);
        rows.shuffle(&mut rng);
        let t = test_count(rows.len(), test_fraction);
        test_rows.extend_from_slice(&rows[..t]);
    }
    test_rows.sort_unstable();
    let mut is_test = alloc::vec![false; ds.n_rows()];
    for &i in &test_rows {
        is_test[i] = true;
    }
    let train_rows: Vec<usize> = (0..ds.n_rows()).filter(|&i| !is_test[i]).collect();
    Ok(SplitPair {
        train: ds.subset(&train_rows),
        test: ds.subset(&test_rows),
        train_rows,
        test_rows,
        test_fraction,
        seed,
    })
}
