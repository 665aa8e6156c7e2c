//! CART classification tree grown on bootstrap samples.
//!
//! Split quality is compared exactly: for a split into (nL, nR) with squared
//! class-count sums (sL, sR), the weighted Gini impurity is
//! `n - (sL/nL + sR/nR)`, so the best split maximizes `(sL*nR + sR*nL) / (nL*nR)`,
//! compared by cross-multiplication in `u128`.

use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;
use crate::rng::SeededRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    /// `x[feature] <= threshold` goes left.
    Split { feature: usize, threshold: f64, left: usize, right: usize },
    Leaf { class_counts: Vec<u32> },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    /// Candidate features drawn per node.
    pub max_features: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    nodes: Vec<TreeNode>,
    n_features: usize,
    n_classes: usize,
}

/// A fraction `num / den`.
#[derive(Clone, Copy)]
struct Score {
    num: u128,
    den: u128,
}

impl Score {
    fn beats(self, other: Score) -> bool {
        self.num * other.den > other.num * self.den
    }

    fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

struct Candidate {
    feature: usize,
    /// Highest rank routed left.
    rank: u32,
    threshold: f64,
    score: Score,
}

/// Per-feature dense ranks of a matrix (equal values share a rank), shared
/// by all trees of a forest.
pub struct ColumnKeys {
    n_rows: usize,
    /// Column-major.
    ranks: Vec<u32>,
    /// Distinct values of each column, ascending; `values[j][rank]`.
    values: Vec<Vec<f64>>,
}

impl ColumnKeys {
    pub fn new(x: &Matrix) -> Self {
        let n = x.rows();
        let mut ranks = alloc::vec![0u32; n * x.cols()];
        let mut values = Vec::with_capacity(x.cols());
        let mut order: Vec<u32> = (0..n as u32).collect();
        for j in 0..x.cols() {
            order.sort_unstable_by(|&a, &b| x.get(a as usize, j).total_cmp(&x.get(b as usize, j)));
            let mut distinct: Vec<f64> = Vec::new();
            for &i in &order {
                let v = x.get(i as usize, j);
                // -0.0 and 0.0 compare equal and share a rank.
                if distinct.last() != Some(&v) {
                    distinct.push(if v == 0.0 { 0.0 } else { v });
                }
                ranks[j * n + i as usize] = (distinct.len() - 1) as u32;
            }
            values.push(distinct);
        }
        ColumnKeys { n_rows: n, ranks, values }
    }

    #[inline]
    fn rank(&self, row: usize, feature: usize) -> u32 {
        self.ranks[feature * self.n_rows + row]
    }

    fn n_features(&self) -> usize {
        self.values.len()
    }
}

/// A distinct training row and how many times the bootstrap drew it.
#[derive(Clone, Copy)]
struct Weighted {
    row: u32,
    weight: u32,
}

#[derive(Clone, Copy, Default)]
struct Entry {
    rank: u32,
    class: u32,
    weight: u32,
}

const RADIX_BITS: u32 = 11;
const RADIX_MIN_LEN: usize = 512;

/// Sorts by rank; LSD radix for long slices, comparison sort otherwise.
fn sort_by_rank(buf: &mut Vec<Entry>, tmp: &mut Vec<Entry>, max_rank: u32) {
    if buf.len() < RADIX_MIN_LEN {
        buf.sort_unstable_by_key(|e| e.rank);
        return;
    }
    let bits = 32 - max_rank.leading_zeros();
    let passes = bits.div_ceil(RADIX_BITS).max(1);
    let digit = bits.div_ceil(passes).max(1);
    let mask = (1u32 << digit) - 1;
    let mut offsets = [0usize; 1 << RADIX_BITS];
    for pass in 0..passes {
        let shift = pass * digit;
        let offsets = &mut offsets[..1 << digit];
        offsets.fill(0);
        for e in buf.iter() {
            offsets[((e.rank >> shift) & mask) as usize] += 1;
        }
        let mut total = 0;
        for o in offsets.iter_mut() {
            let c = *o;
            *o = total;
            total += c;
        }
        tmp.clear();
        tmp.resize(buf.len(), Entry::default());
        for e in buf.iter() {
            let slot = &mut offsets[((e.rank >> shift) & mask) as usize];
            tmp[*slot] = *e;
            *slot += 1;
        }
        core::mem::swap(buf, tmp);
    }
}

struct Builder<'a> {
    cols: &'a ColumnKeys,
    y: &'a [usize],
    n_classes: usize,
    params: TreeParams,
    rng: &'a mut SeededRng,
    nodes: Vec<TreeNode>,
    importance: Vec<f64>,
    n_root: f64,
    features: Vec<usize>,
    buf: Vec<Entry>,
    tmp: Vec<Entry>,
    left: Vec<u64>,
    right: Vec<u64>,
}

impl Builder<'_> {
    fn build(&mut self, samples: &mut [Weighted], depth: usize) -> usize {
        let mut counts = alloc::vec![0u64; self.n_classes];
        for s in samples.iter() {
            counts[self.y[s.row as usize]] += s.weight as u64;
        }
        let n: u64 = counts.iter().sum();
        let id = self.nodes.len();
        self.nodes.push(TreeNode::Leaf { class_counts: Vec::new() });

        let non_empty = counts.iter().filter(|&&c| c > 0).count();
        let splittable = depth < self.params.max_depth
            && n >= self.params.min_samples_split as u64
            && n >= 2 * self.params.min_samples_leaf as u64
            && non_empty > 1;
        let split = if splittable { self.best_split(samples, &counts, n) } else { None };
        let Some(split) = split else {
            self.nodes[id] = TreeNode::Leaf { class_counts: counts.iter().map(|&c| c as u32).collect() };
            return id;
        };

        let sumsq: u128 = counts.iter().map(|&c| (c as u128) * (c as u128)).sum();
        let parent = sumsq as f64 / n as f64;
        self.importance[split.feature] += (split.score.value() - parent) / self.n_root;

        let mut n_left = 0;
        for j in 0..samples.len() {
            if self.cols.rank(samples[j].row as usize, split.feature) <= split.rank {
                samples.swap(n_left, j);
                n_left += 1;
            }
        }
        let (l, r) = samples.split_at_mut(n_left);
        let left = self.build(l, depth + 1);
        let right = self.build(r, depth + 1);
        self.nodes[id] = TreeNode::Split { feature: split.feature, threshold: split.threshold, left, right };
        id
    }

    fn best_split(&mut self, samples: &[Weighted], counts: &[u64], n: u64) -> Option<Candidate> {
        let d = self.features.len();
        let mtry = self.params.max_features.clamp(1, d);
        for i in 0..mtry {
            let j = self.rng.random_range(i..d);
            self.features.swap(i, j);
        }
        let sumsq: u128 = counts.iter().map(|&c| (c as u128) * (c as u128)).sum();
        // Must strictly beat the parent's own impurity.
        let mut best_score = Score { num: sumsq, den: n as u128 };
        let mut best_value = best_score.value();
        let mut best: Option<Candidate> = None;
        let min_leaf = self.params.min_samples_leaf as u64;

        for fi in 0..mtry {
            let f = self.features[fi];
            self.buf.clear();
            self.buf.extend(samples.iter().map(|s| Entry {
                rank: self.cols.rank(s.row as usize, f),
                class: self.y[s.row as usize] as u32,
                weight: s.weight,
            }));
            let max_rank = self.buf.iter().map(|e| e.rank).max().unwrap_or(0);
            sort_by_rank(&mut self.buf, &mut self.tmp, max_rank);
            if self.buf[0].rank == self.buf[self.buf.len() - 1].rank {
                continue;
            }
            self.left.iter_mut().for_each(|c| *c = 0);
            self.right.copy_from_slice(counts);
            // Row indices are u32, so n < 2^32 and every sum of squares fits in u64.
            let (mut s_left, mut s_right): (u64, u64) = (0, sumsq as u64);
            let mut n_left = 0u64;
            for i in 0..self.buf.len() - 1 {
                let Entry { rank, class, weight } = self.buf[i];
                let (k, w) = (class as usize, weight as u64);
                s_left += 2 * self.left[k] * w + w * w;
                self.left[k] += w;
                s_right -= 2 * self.right[k] * w - w * w;
                self.right[k] -= w;
                n_left += w;
                if rank == self.buf[i + 1].rank {
                    continue;
                }
                let n_right = n - n_left;
                if n_left < min_leaf || n_right < min_leaf {
                    continue;
                }
                let (nl, nr) = (n_left as f64, n_right as f64);
                let approx = s_left as f64 * nr + s_right as f64 * nl;
                // The float estimate only prunes clear losers; near-ties are
                // settled exactly.
                if approx < best_value * (1.0 - 1e-9) * nl * nr {
                    continue;
                }
                let score = Score {
                    num: s_left as u128 * n_right as u128 + s_right as u128 * n_left as u128,
                    den: n_left as u128 * n_right as u128,
                };
                if score.beats(best_score) {
                    best_score = score;
                    best_value = score.value();
                    let values = &self.cols.values[f];
                    let (a, b) = (values[rank as usize], values[self.buf[i + 1].rank as usize]);
                    let mut t = a / 2.0 + b / 2.0;
                    if !(t >= a && t < b) {
                        t = a;
                    }
                    if t == 0.0 {
                        // +0.0, so a zero threshold prints and compares cleanly.
                        t = 0.0;
                    }
                    best = Some(Candidate { feature: f, rank, threshold: t, score });
                }
            }
        }
        best
    }
}

impl DecisionTree {
    /// Grows a tree on `samples` (row indices into `x`, repeats allowed).
    /// Returns the tree and its unnormalized impurity-decrease importances.
    pub fn fit(
        x: &Matrix,
        y: &[usize],
        samples: &[usize],
        n_classes: usize,
        params: TreeParams,
        rng: &mut SeededRng,
    ) -> (DecisionTree, Vec<f64>) {
        Self::fit_with_keys(&ColumnKeys::new(x), y, samples, n_classes, params, rng)
    }

    /// As [`fit`](Self::fit), over precomputed column keys.
    pub fn fit_with_keys(
        cols: &ColumnKeys,
        y: &[usize],
        samples: &[usize],
        n_classes: usize,
        params: TreeParams,
        rng: &mut SeededRng,
    ) -> (DecisionTree, Vec<f64>) {
        let d = cols.n_features();
        let mut multiplicity = alloc::vec![0u32; cols.n_rows];
        for &s in samples {
            multiplicity[s] += 1;
        }
        let mut work: Vec<Weighted> = multiplicity
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0)
            .map(|(row, &weight)| Weighted { row: row as u32, weight })
            .collect();
        let mut b = Builder {
            cols,
            y,
            n_classes,
            params,
            rng,
            nodes: Vec::new(),
            importance: alloc::vec![0.0; d],
            n_root: samples.len().max(1) as f64,
            features: (0..d).collect(),
            buf: Vec::with_capacity(work.len()),
            tmp: Vec::new(),
            left: alloc::vec![0; n_classes],
            right: alloc::vec![0; n_classes],
        };
        b.build(&mut work, 0);
        let importance = b.importance;
        (DecisionTree { nodes: b.nodes, n_features: d, n_classes }, importance)
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn leaf_counts(&self, row: &[f64]) -> &[u32] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                TreeNode::Split { feature, threshold, left, right } => {
                    i = if row[*feature] <= *threshold { *left } else { *right };
                }
                TreeNode::Leaf { class_counts } => return class_counts,
            }
        }
    }

    /// Leaf class frequencies for one row.
    pub fn predict_proba_row(&self, row: &[f64]) -> Vec<f64> {
        let counts = self.leaf_counts(row);
        let total: u32 = counts.iter().sum();
        counts.iter().map(|&c| c as f64 / total as f64).collect()
    }

    /// Longest root-to-leaf path in edges.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], i: usize) -> usize {
            match &nodes[i] {
                TreeNode::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
                TreeNode::Leaf { .. } => 0,
            }
        }
        walk(&self.nodes, 0)
    }
}
