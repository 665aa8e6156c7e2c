//! Recursive feature elimination ranked by random-forest impurity importance.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::models::validation::stratified_sample;
use crate::models::{RandomForest, RfHyperParams};
use crate::rng::STREAM_RFE;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RfeOptions {
    /// Features removed per round.
    pub step: usize,
    /// Ranking fits use a stratified sample of at most this many rows.
    pub max_rows: usize,
    pub forest: RfHyperParams,
}

impl Default for RfeOptions {
    fn default() -> Self {
        RfeOptions { step: 1, max_rows: 20_000, forest: RfHyperParams::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSubset {
    /// Surviving column indices, ascending.
    pub selected: Vec<usize>,
    /// Per column: 1 if selected, otherwise 1 + the round that eliminated it.
    pub ranking: Vec<usize>,
    /// Eliminated columns in the order they were removed.
    pub elimination_order: Vec<usize>,
}

impl FeatureSubset {
    pub fn selected_names(&self, feature_names: &[String]) -> Vec<String> {
        self.selected.iter().map(|&j| feature_names[j].clone()).collect()
    }
}

/// Repeatedly fits the ranking forest on the surviving columns and drops the
/// least important `step` of them (ties: highest column index first) until
/// `k` remain.
pub fn rfe_select(ds: &Dataset, k: usize, opts: &RfeOptions, seed: u64) -> Result<FeatureSubset> {
    let d = ds.n_features();
    if k < 1 || k > d {
        return Err(Error::InvalidParameter(alloc::format!("cannot select {k} of {d} features")));
    }
    if opts.step < 1 {
        return Err(Error::InvalidParameter("rfe step must be >= 1".into()));
    }
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let fraction = if ds.n_rows() > opts.max_rows { opts.max_rows as f64 / ds.n_rows() as f64 } else { 1.0 };
    let rows = stratified_sample(ds.y(), ds.n_classes(), fraction, seed, STREAM_RFE);
    let sample = ds.subset(&rows);

    let mut surviving: Vec<usize> = (0..d).collect();
    let mut ranking = alloc::vec![1; d];
    let mut elimination_order = Vec::with_capacity(d - k);
    let mut round = 0;
    while surviving.len() > k {
        round += 1;
        let x = sample.x().select_cols(&surviving);
        let (_, importance) = RandomForest::fit(&x, sample.y(), sample.n_classes(), &opts.forest);
        let mut order: Vec<usize> = (0..surviving.len()).collect();
        order.sort_by(|&a, &b| importance[a].total_cmp(&importance[b]).then(b.cmp(&a)));
        let remove = opts.step.min(surviving.len() - k);
        let mut gone: Vec<usize> = order[..remove].to_vec();
        for &p in &gone {
            ranking[surviving[p]] = round + 1;
            elimination_order.push(surviving[p]);
        }
        gone.sort_unstable();
        for &p in gone.iter().rev() {
            surviving.remove(p);
        }
    }
    Ok(FeatureSubset { selected: surviving, ranking, elimination_order })
}
