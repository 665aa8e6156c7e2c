//! Stratified k-fold cross-validation, grid search and learning curves.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{accuracy, fit_classifier, ModelSpec};
use crate::dataset::{class_indices, Dataset};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_for, STREAM_CURVE, STREAM_CV};

/// Fold id per row. Each class is shuffled and dealt round-robin, continuing
/// the rotation from the previous class, so per-class fold sizes differ by at
/// most one. Classes with fewer rows than folds are returned as flagged.
pub fn stratified_folds(y: &[usize], n_classes: usize, folds: usize, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut assignment = alloc::vec![0; y.len()];
    let mut flagged = Vec::new();
    let mut next = 0;
    for (c, mut rows) in class_indices(y, n_classes).into_iter().enumerate() {
        if !rows.is_empty() && rows.len() < folds {
            flagged.push(c);
        }
        rows.shuffle(&mut rng_for(seed, &[STREAM_CV, c as u64]));
        for r in rows {
            assignment[r] = next;
            next = (next + 1) % folds;
        }
    }
    (assignment, flagged)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvOutcome {
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    /// Classes with fewer rows than folds, spread best-effort.
    pub flagged_classes: Vec<usize>,
}

pub fn cross_validate(spec: &ModelSpec, ds: &Dataset, folds: usize, seed: u64) -> Result<CvOutcome> {
    if folds < 2 {
        return Err(Error::InvalidParameter(alloc::format!("need at least 2 folds, got {folds}")));
    }
    if folds > ds.n_rows() {
        return Err(Error::InvalidParameter(alloc::format!("{folds} folds for {} rows", ds.n_rows())));
    }
    let (assignment, flagged_classes) = stratified_folds(ds.y(), ds.n_classes(), folds, seed);
    let mut fold_accuracies = Vec::with_capacity(folds);
    for f in 0..folds {
        let (held, kept): (Vec<usize>, Vec<usize>) = (0..ds.n_rows()).partition(|&i| assignment[i] == f);
        let model = fit_classifier(spec, &ds.subset(&kept), derive_seed(seed, f as u64))?;
        let test = ds.subset(&held);
        let pred = model.predict(test.x())?;
        fold_accuracies.push(accuracy(test.y(), &pred));
    }
    let mean_accuracy = fold_accuracies.iter().sum::<f64>() / folds as f64;
    Ok(CvOutcome { fold_accuracies, mean_accuracy, flagged_classes })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridOutcome {
    pub best_index: usize,
    pub best_spec: ModelSpec,
    pub best_score: f64,
    /// Cross-validation outcome of every grid entry, in grid order.
    pub results: Vec<CvOutcome>,
}

/// Cross-validates every spec; the highest mean accuracy wins, ties to the
/// earliest entry.
pub fn grid_search(grid: &[ModelSpec], ds: &Dataset, folds: usize, seed: u64) -> Result<GridOutcome> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty grid".into()));
    }
    let results: Vec<CvOutcome> = grid.iter().map(|s| cross_validate(s, ds, folds, seed)).collect::<Result<_>>()?;
    let mut best_index = 0;
    for (i, r) in results.iter().enumerate() {
        if r.mean_accuracy > results[best_index].mean_accuracy {
            best_index = i;
        }
    }
    Ok(GridOutcome {
        best_index,
        best_spec: grid[best_index].clone(),
        best_score: results[best_index].mean_accuracy,
        results,
    })
}

/// Seeded per-class sample of `max(1, floor(n_c * fraction))` rows from every
/// non-empty class, returned in ascending row order. `fraction >= 1` keeps all.
pub fn stratified_sample(y: &[usize], n_classes: usize, fraction: f64, seed: u64, stream: u64) -> Vec<usize> {
    if fraction >= 1.0 {
        return (0..y.len()).collect();
    }
    let mut picked = Vec::new();
    for (c, mut rows) in class_indices(y, n_classes).into_iter().enumerate() {
        if rows.is_empty() {
            continue;
        }
        rows.shuffle(&mut rng_for(seed, &[stream, c as u64]));
        let take = (libm::floor(rows.len() as f64 * fraction + 1e-9) as usize).clamp(1, rows.len());
        picked.extend_from_slice(&rows[..take]);
    }
    picked.sort_unstable();
    picked
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningCurvePoint {
    pub fraction: f64,
    pub n_rows: usize,
    pub train_accuracy: f64,
    pub cv_accuracy: f64,
}

/// Training and cross-validated accuracy on growing stratified subsamples.
/// The entry for fraction 1.0 is exactly `cross_validate(spec, ds, folds, seed)`.
pub fn learning_curve(spec: &ModelSpec, ds: &Dataset, fractions: &[f64], folds: usize, seed: u64) -> Result<Vec<LearningCurvePoint>> {
    if fractions.iter().any(|&f| !(f > 0.0 && f <= 1.0)) {
        return Err(Error::InvalidParameter("learning-curve fractions must lie in (0, 1]".into()));
    }
    if fractions.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("learning-curve fractions must be ascending".into()));
    }
    let mut points = Vec::with_capacity(fractions.len());
    for &fraction in fractions {
        let rows = stratified_sample(ds.y(), ds.n_classes(), fraction, seed, STREAM_CURVE);
        if rows.len() < folds {
            return Err(Error::InvalidParameter(alloc::format!(
                "fraction {fraction} leaves {} rows for {folds} folds",
                rows.len()
            )));
        }
        let sub = ds.subset(&rows);
        let model = fit_classifier(spec, &sub, seed)?;
        let train_accuracy = accuracy(sub.y(), &model.predict(sub.x())?);
        let cv = cross_validate(spec, &sub, folds, seed)?;
        points.push(LearningCurvePoint { fraction, n_rows: rows.len(), train_accuracy, cv_accuracy: cv.mean_accuracy });
    }
    Ok(points)
}
