//! Hybrid rebalancing: uniform undersampling of large classes and SMOTE
//! interpolation for small ones, to a common per-class count.

use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::matrix::{squared_distance, Matrix};
use crate::rng::{rng_for, SeededRng, STREAM_RESAMPLE};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub target_per_class: usize,
    pub k_neighbors: usize,
    pub seed: u64,
    /// Keep the (base, neighbour, u) origin of every synthetic row.
    pub record_provenance: bool,
}

impl Default for SamplingPlan {
    fn default() -> Self {
        SamplingPlan { target_per_class: 10_000, k_neighbors: 5, seed: 42, record_provenance: false }
    }
}

impl SamplingPlan {
    fn validate(&self) -> Result<()> {
        if self.target_per_class < 1 || self.k_neighbors < 1 {
            return Err(Error::InvalidParameter("target_per_class and k_neighbors must be >= 1".into()));
        }
        Ok(())
    }
}

/// A synthetic row equals `base + u * (neighbor - base)`; indices refer to the
/// input dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticOrigin {
    pub row: usize,
    pub base: usize,
    pub neighbor: usize,
    pub u: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Resampled {
    pub dataset: Dataset,
    /// Present when the plan asked for provenance.
    pub provenance: Option<Vec<SyntheticOrigin>>,
}

fn class_rng(seed: u64, class: usize) -> SeededRng {
    rng_for(seed, &[STREAM_RESAMPLE, class as u64])
}

/// `m` of the given rows, uniformly without replacement, ascending.
fn draw_subset(rows: &[usize], m: usize, rng: &mut SeededRng) -> Vec<usize> {
    let mut picked: Vec<usize> = index::sample(rng, rows.len(), m).into_iter().map(|p| rows[p]).collect();
    picked.sort_unstable();
    picked
}

/// Nearest same-class rows of `base` (itself excluded), ties to the lower row index.
fn class_neighbors(x: &Matrix, rows: &[usize], base: usize, k: usize) -> Vec<usize> {
    let q = x.row(base);
    let mut d: Vec<(f64, usize)> = rows.iter().filter(|&&r| r != base).map(|&r| (squared_distance(q, x.row(r)), r)).collect();
    let cmp = |a: &(f64, usize), b: &(f64, usize)| -> Ordering { a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)) };
    let k = k.min(d.len());
    if k < d.len() && k > 0 {
        d.select_nth_unstable_by(k - 1, cmp);
        d.truncate(k);
    }
    d.sort_unstable_by(cmp);
    d.into_iter().take(k).map(|p| p.1).collect()
}

/// Generates `count` SMOTE rows for the class whose rows are `rows`.
fn synthesize(x: &Matrix, rows: &[usize], count: usize, k: usize, rng: &mut SeededRng) -> (Matrix, Vec<(usize, usize, f64)>) {
    let mut out = Matrix::new(0, x.cols(), Vec::with_capacity(count * x.cols())).expect("empty matrix");
    let mut origins = Vec::with_capacity(count);
    let mut cache: Vec<Option<Vec<usize>>> = alloc::vec![None; rows.len()];
    let mut buf = alloc::vec![0.0; x.cols()];
    for _ in 0..count {
        let p = rng.random_range(0..rows.len());
        let base = rows[p];
        if rows.len() == 1 {
            out.push_row(x.row(base)).expect("width");
            origins.push((base, base, 0.0));
            continue;
        }
        let nbrs = cache[p].get_or_insert_with(|| class_neighbors(x, rows, base, k));
        let nb = nbrs[rng.random_range(0..nbrs.len())];
        let u: f64 = rng.random();
        for ((o, a), b) in buf.iter_mut().zip(x.row(base)).zip(x.row(nb)) {
            *o = a + u * (b - a);
        }
        out.push_row(&buf).expect("width");
        origins.push((base, nb, u));
    }
    (out, origins)
}

/// Keeps `m` rows of class `c` chosen uniformly without replacement; other
/// rows are untouched and overall row order is preserved.
pub fn undersample(ds: &Dataset, class: usize, m: usize, seed: u64) -> Result<Dataset> {
    let rows = ds.class_indices().into_iter().nth(class).ok_or(Error::LabelOutOfRange { label: class, n_classes: ds.n_classes() })?;
    if m > rows.len() {
        return Err(Error::NotEnoughRows { class, available: rows.len(), requested: m });
    }
    let mut keep = alloc::vec![true; ds.n_rows()];
    for &r in &rows {
        keep[r] = false;
    }
    for r in draw_subset(&rows, m, &mut class_rng(seed, class)) {
        keep[r] = true;
    }
    let idx: Vec<usize> = (0..ds.n_rows()).filter(|&i| keep[i]).collect();
    Ok(ds.subset(&idx))
}

/// Appends `m - n_c` SMOTE rows labelled `c`. Each is `x_i + u (x_nb - x_i)`
/// with `x_i` a random class row, `x_nb` one of its `min(k, n_c - 1)` nearest
/// class neighbours and `u ~ U[0, 1)`; a lone row is duplicated instead.
pub fn smote_oversample(ds: &Dataset, class: usize, m: usize, k: usize, seed: u64) -> Result<Dataset> {
    Ok(smote_with_origins(ds, class, m, k, seed)?.0)
}

/// [`smote_oversample`] plus the origin of each appended row.
pub fn smote_with_origins(ds: &Dataset, class: usize, m: usize, k: usize, seed: u64) -> Result<(Dataset, Vec<SyntheticOrigin>)> {
    let rows = ds.class_indices().into_iter().nth(class).ok_or(Error::LabelOutOfRange { label: class, n_classes: ds.n_classes() })?;
    if rows.is_empty() {
        return Err(Error::NotEnoughRows { class, available: 0, requested: m });
    }
    if m < rows.len() {
        return Err(Error::TargetBelowCount { class, available: rows.len(), target: m });
    }
    if k < 1 {
        return Err(Error::InvalidParameter("k_neighbors must be >= 1".into()));
    }
    let (synth, origins) = synthesize(ds.x(), &rows, m - rows.len(), k, &mut class_rng(seed, class));
    let mut x = ds.x().clone();
    let mut y = ds.y().to_vec();
    let first = ds.n_rows();
    for r in synth.iter_rows() {
        x.push_row(r)?;
        y.push(class);
    }
    let origins = origins
        .into_iter()
        .enumerate()
        .map(|(i, (base, neighbor, u))| SyntheticOrigin { row: first + i, base, neighbor, u })
        .collect();
    Ok((ds.with_rows(x, y)?, origins))
}

/// Brings every non-empty class to exactly `plan.target_per_class` rows.
/// Output is grouped by class (ascending): the class's kept original rows in
/// input order, then its synthetic rows. Empty classes stay empty.
pub fn hybrid_resample(train: &Dataset, plan: &SamplingPlan) -> Result<Resampled> {
    plan.validate()?;
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let target = plan.target_per_class;
    let mut x = Matrix::new(0, train.n_features(), Vec::new())?;
    let mut y = Vec::new();
    let mut provenance = Vec::new();
    for (c, rows) in train.class_indices().into_iter().enumerate() {
        if rows.is_empty() {
            continue;
        }
        let mut rng = class_rng(plan.seed, c);
        let kept = if rows.len() > target { draw_subset(&rows, target, &mut rng) } else { rows.clone() };
        for &r in &kept {
            x.push_row(train.x().row(r))?;
            y.push(c);
        }
        if rows.len() < target {
            let (synth, origins) = synthesize(train.x(), &rows, target - rows.len(), plan.k_neighbors, &mut rng);
            for (r, (base, neighbor, u)) in synth.iter_rows().zip(origins) {
                if plan.record_provenance {
                    provenance.push(SyntheticOrigin { row: y.len(), base, neighbor, u });
                }
                x.push_row(r)?;
                y.push(c);
            }
        }
    }
    Ok(Resampled {
        dataset: train.with_rows(x, y)?,
        provenance: plan.record_provenance.then_some(provenance),
    })
}

/// Distance from `s` to the point `p + u (q - p)`.
pub fn interpolation_residual(s: &[f64], p: &[f64], q: &[f64], u: f64) -> f64 {
    let mut acc = 0.0;
    for ((sv, pv), qv) in s.iter().zip(p).zip(q) {
        let e = sv - (pv + u * (qv - pv));
        acc += e * e;
    }
    libm::sqrt(acc)
}
