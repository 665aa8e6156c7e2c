use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tree::{ColumnKeys, DecisionTree, TreeParams};
use super::RfHyperParams;
use crate::matrix::Matrix;
use crate::rng::rng_for;

/// Bagged CART trees with `floor(sqrt(d))` candidate features per node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    trees: Vec<DecisionTree>,
    n_classes: usize,
    n_features: usize,
}

pub(crate) fn features_per_split(d: usize) -> usize {
    (libm::floor(libm::sqrt(d as f64)) as usize).max(1)
}

impl RandomForest {
    /// Fits the forest and returns it with mean impurity-decrease importances
    /// (per-tree normalized, averaged over trees, normalized to sum 1; all zero
    /// when no tree split at all).
    pub fn fit(x: &Matrix, y: &[usize], n_classes: usize, hp: &RfHyperParams) -> (RandomForest, Vec<f64>) {
        let n = x.rows();
        let d = x.cols();
        let params = TreeParams {
            max_depth: hp.max_depth,
            min_samples_split: hp.min_samples_split,
            min_samples_leaf: hp.min_samples_leaf,
            max_features: features_per_split(d),
        };
        let mut importance = alloc::vec![0.0; d];
        let mut trees = Vec::with_capacity(hp.n_estimators);
        let cols = ColumnKeys::new(x);
        let mut bootstrap = alloc::vec![0usize; n];
        for t in 0..hp.n_estimators {
            let mut rng = rng_for(hp.seed, &[t as u64]);
            for b in bootstrap.iter_mut() {
                *b = rng.random_range(0..n);
            }
            let (tree, imp) = DecisionTree::fit_with_keys(&cols, y, &bootstrap, n_classes, params, &mut rng);
            let total: f64 = imp.iter().sum();
            if total > 0.0 {
                for (acc, v) in importance.iter_mut().zip(&imp) {
                    *acc += v / total;
                }
            }
            trees.push(tree);
        }
        let total: f64 = importance.iter().sum();
        if total > 0.0 {
            importance.iter_mut().for_each(|v| *v /= total);
        }
        (RandomForest { trees, n_classes, n_features: d }, importance)
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Mean of the trees' leaf class frequencies.
    pub fn predict_proba(&self, x: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(x.rows(), self.n_classes);
        let k = self.trees.len() as f64;
        for i in 0..x.rows() {
            let row = x.row(i);
            let acc = out.row_mut(i);
            for tree in &self.trees {
                let counts = tree.leaf_counts(row);
                let total: u32 = counts.iter().sum();
                for (a, &c) in acc.iter_mut().zip(counts) {
                    *a += c as f64 / total as f64;
                }
            }
            acc.iter_mut().for_each(|a| *a /= k);
        }
        out
    }
}
