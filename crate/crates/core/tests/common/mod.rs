#![allow(dead_code)]

use hybrid_ids_core::{Dataset, Matrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn names(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

/// Gaussian blobs: class `c` centred at `spread * e_c` (first `n_classes`
/// dims) with unit noise on every dim.
pub fn blobs(counts: &[usize], d: usize, spread: f64, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for (c, &n) in counts.iter().enumerate() {
        for _ in 0..n {
            let row: Vec<f64> = (0..d)
                .map(|j| {
                    let z: f64 = StandardNormal.sample(&mut r);
                    z + if j == c { spread } else { 0.0 }
                })
                .collect();
            rows.push(row);
            y.push(c);
        }
    }
    Dataset::new(Matrix::from_rows(&rows).unwrap(), y, names("f", d), names("class", counts.len())).unwrap()
}

pub fn normal_matrix(n: usize, d: usize, seed: u64) -> Matrix {
    let mut r = rng(seed);
    let data = (0..n * d).map(|_| StandardNormal.sample(&mut r)).collect();
    Matrix::new(n, d, data).unwrap()
}

pub fn uniform(r: &mut ChaCha8Rng) -> f64 {
    r.random()
}

/// Nearest-centroid training accuracy: an independent separability oracle.
pub fn nearest_centroid_accuracy(ds: &Dataset) -> f64 {
    let c = ds.n_classes();
    let d = ds.n_features();
    let mut sums = vec![vec![0.0; d]; c];
    let counts = ds.class_counts();
    for (i, row) in ds.x().iter_rows().enumerate() {
        for (s, v) in sums[ds.y()[i]].iter_mut().zip(row) {
            *s += v;
        }
    }
    for (s, &n) in sums.iter_mut().zip(&counts) {
        s.iter_mut().for_each(|v| *v /= n.max(1) as f64);
    }
    let hits = ds
        .x()
        .iter_rows()
        .zip(ds.y())
        .filter(|(row, &label)| {
            let best = (0..c)
                .min_by(|&a, &b| {
                    let da: f64 = sums[a].iter().zip(*row).map(|(m, v)| (m - v).powi(2)).sum();
                    let db: f64 = sums[b].iter().zip(*row).map(|(m, v)| (m - v).powi(2)).sum();
                    da.total_cmp(&db)
                })
                .unwrap();
            best == label
        })
        .count();
    hits as f64 / ds.n_rows() as f64
}
