use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::matrix::{squared_distance, Matrix};

/// Lazy k-nearest-neighbour classifier over the stored training matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knn {
    k: usize,
    x: Matrix,
    y: Vec<usize>,
    n_classes: usize,
}

fn by_distance_then_index(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

impl Knn {
    pub fn fit(x: &Matrix, y: &[usize], n_classes: usize, k: usize) -> Knn {
        Knn { k, x: x.clone(), y: y.to_vec(), n_classes }
    }

    pub fn n_features(&self) -> usize {
        self.x.cols()
    }

    /// Training indices of the `min(k, n)` nearest rows, nearest first;
    /// equal distances go to the lower index.
    pub fn neighbors(&self, query: &[f64]) -> Vec<usize> {
        let mut buf = Vec::with_capacity(self.x.rows());
        self.neighbors_into(query, &mut buf);
        buf.iter().map(|p| p.1).collect()
    }

    fn neighbors_into(&self, query: &[f64], buf: &mut Vec<(f64, usize)>) {
        buf.clear();
        buf.extend(self.x.iter_rows().enumerate().map(|(i, r)| (squared_distance(query, r), i)));
        let k = self.k.min(buf.len());
        if k < buf.len() {
            buf.select_nth_unstable_by(k - 1, by_distance_then_index);
            buf.truncate(k);
        }
        buf.sort_unstable_by(by_distance_then_index);
    }

    /// Class fractions among the nearest neighbours.
    pub fn predict_proba(&self, x: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(x.rows(), self.n_classes);
        let mut buf = Vec::with_capacity(self.x.rows());
        for i in 0..x.rows() {
            self.neighbors_into(x.row(i), &mut buf);
            let share = 1.0 / buf.len() as f64;
            let row = out.row_mut(i);
            for &(_, j) in &buf {
                row[self.y[j]] += share;
            }
        }
        out
    }
}
