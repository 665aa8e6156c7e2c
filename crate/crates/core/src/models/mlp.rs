//! One-hidden-layer perceptron: ReLU hidden units, softmax output, mean
//! cross-entropy, mini-batch gradient descent with classical momentum and
//! early stopping on a held-out tenth of the training rows.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::logreg::softmax_in_place;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{rng_for, SeededRng, STREAM_FIT, STREAM_VALIDATION};

/// Network parameters as one flat vector laid out `[W1 (h x d), b1 (h), W2 (c x h), b2 (c)]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpNetwork {
    n_inputs: usize,
    n_hidden: usize,
    n_outputs: usize,
    params: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlpOptions {
    pub hidden: usize,
    pub lr: f64,
    pub momentum: f64,
    pub batch: usize,
    pub max_epochs: usize,
    pub patience: usize,
}

struct Scratch {
    hidden: Vec<f64>,
    out: Vec<f64>,
    delta_hidden: Vec<f64>,
}

impl MlpNetwork {
    /// Uniform init in `±sqrt(6 / (fan_in + fan_out))` per layer, biases included.
    pub fn init(n_inputs: usize, n_hidden: usize, n_outputs: usize, rng: &mut SeededRng) -> Self {
        let mut params = Vec::with_capacity(n_hidden * n_inputs + n_hidden + n_outputs * n_hidden + n_outputs);
        let l1 = libm::sqrt(6.0 / (n_inputs + n_hidden) as f64);
        for _ in 0..n_hidden * (n_inputs + 1) {
            params.push(rng.random_range(-l1..l1));
        }
        let l2 = libm::sqrt(6.0 / (n_hidden + n_outputs) as f64);
        for _ in 0..n_outputs * (n_hidden + 1) {
            params.push(rng.random_range(-l2..l2));
        }
        MlpNetwork { n_inputs, n_hidden, n_outputs, params }
    }

    pub fn n_features(&self) -> usize {
        self.n_inputs
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn offsets(&self) -> (usize, usize, usize) {
        let b1 = self.n_hidden * self.n_inputs;
        let w2 = b1 + self.n_hidden;
        let b2 = w2 + self.n_outputs * self.n_hidden;
        (b1, w2, b2)
    }

    fn scratch(&self) -> Scratch {
        Scratch {
            hidden: alloc::vec![0.0; self.n_hidden],
            out: alloc::vec![0.0; self.n_outputs],
            delta_hidden: alloc::vec![0.0; self.n_hidden],
        }
    }

    /// Hidden activations and output logits for one row.
    fn forward(&self, row: &[f64], s: &mut Scratch) {
        let (b1, w2, b2) = self.offsets();
        let p = &self.params;
        for (h, a) in s.hidden.iter_mut().enumerate() {
            let w = &p[h * self.n_inputs..(h + 1) * self.n_inputs];
            let mut z = p[b1 + h];
            for (wi, xi) in w.iter().zip(row) {
                z += wi * xi;
            }
            *a = if z > 0.0 { z } else { 0.0 };
        }
        for (c, o) in s.out.iter_mut().enumerate() {
            let w = &p[w2 + c * self.n_hidden..w2 + (c + 1) * self.n_hidden];
            let mut z = p[b2 + c];
            for (wi, ai) in w.iter().zip(&s.hidden) {
                z += wi * ai;
            }
            *o = z;
        }
    }

    /// Mean cross-entropy over `rows`; accumulates its gradient into `grad`
    /// (overwritten) when given.
    pub fn loss_and_gradient(&self, x: &Matrix, y: &[usize], rows: &[usize], mut grad: Option<&mut [f64]>) -> f64 {
        let (b1, w2, b2) = self.offsets();
        let (d, hn) = (self.n_inputs, self.n_hidden);
        let mut s = self.scratch();
        if let Some(g) = grad.as_deref_mut() {
            g.iter_mut().for_each(|v| *v = 0.0);
        }
        let mut loss = 0.0;
        for &r in rows {
            let row = x.row(r);
            self.forward(row, &mut s);
            let label = y[r];
            let zy = s.out[label];
            loss += softmax_in_place(&mut s.out) - zy;
            let Some(g) = grad.as_deref_mut() else { continue };
            s.out[label] -= 1.0;
            s.delta_hidden.iter_mut().for_each(|v| *v = 0.0);
            for (c, &dc) in s.out.iter().enumerate() {
                let wrow = &self.params[w2 + c * hn..w2 + (c + 1) * hn];
                let grow = &mut g[w2 + c * hn..w2 + (c + 1) * hn];
                for h in 0..hn {
                    grow[h] += dc * s.hidden[h];
                    s.delta_hidden[h] += dc * wrow[h];
                }
                g[b2 + c] += dc;
            }
            for h in 0..hn {
                if s.hidden[h] <= 0.0 {
                    continue;
                }
                let dh = s.delta_hidden[h];
                for (gw, xi) in g[h * d..(h + 1) * d].iter_mut().zip(row) {
                    *gw += dh * xi;
                }
                g[b1 + h] += dh;
            }
        }
        let n = rows.len() as f64;
        if let Some(g) = grad {
            g.iter_mut().for_each(|v| *v /= n);
        }
        loss / n
    }

    pub fn predict_proba(&self, x: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(x.rows(), self.n_outputs);
        let mut s = self.scratch();
        for i in 0..x.rows() {
            self.forward(x.row(i), &mut s);
            softmax_in_place(&mut s.out);
            out.row_mut(i).copy_from_slice(&s.out);
        }
        out
    }

    /// Trains from a seeded initialization; returns the parameters with the
    /// best validation loss and the number of epochs run.
    pub fn fit(x: &Matrix, y: &[usize], n_classes: usize, opts: MlpOptions, seed: u64) -> Result<(Self, usize)> {
        let n = x.rows();
        let mut rng = rng_for(seed, &[STREAM_FIT]);
        let mut net = MlpNetwork::init(x.cols(), opts.hidden, n_classes, &mut rng);

        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng_for(seed, &[STREAM_VALIDATION]));
        let n_val = if n >= 2 { (libm::round(n as f64 * 0.1) as usize).clamp(1, n - 1) } else { 0 };
        let (val, train) = order.split_at(n_val);
        let mut train = train.to_vec();
        let val = if val.is_empty() { train.clone() } else { val.to_vec() };

        let mut velocity = alloc::vec![0.0; net.params.len()];
        let mut grad = alloc::vec![0.0; net.params.len()];
        let mut best = net.clone();
        let mut best_loss = net.loss_and_gradient(x, y, &val, None);
        let mut stale = 0;
        let mut epochs = 0;
        for epoch in 1..=opts.max_epochs {
            epochs = epoch;
            train.shuffle(&mut rng);
            for batch in train.chunks(opts.batch) {
                let loss = net.loss_and_gradient(x, y, batch, Some(&mut grad));
                if !loss.is_finite() {
                    return Err(Error::Divergence { model: "mlp", iteration: epoch });
                }
                for ((p, v), g) in net.params.iter_mut().zip(velocity.iter_mut()).zip(&grad) {
                    *v = opts.momentum * *v - opts.lr * g;
                    *p += *v;
                }
            }
            let val_loss = net.loss_and_gradient(x, y, &val, None);
            if !val_loss.is_finite() {
                return Err(Error::Divergence { model: "mlp", iteration: epoch });
            }
            if val_loss < best_loss {
                best_loss = val_loss;
                best.params.copy_from_slice(&net.params);
                stale = 0;
            } else {
                stale += 1;
                if stale >= opts.patience {
                    break;
                }
            }
        }
        Ok((best, epochs))
    }
}
