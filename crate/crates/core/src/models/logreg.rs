//! Multinomial logistic regression trained by full-batch gradient descent on
//! the L2-regularized mean cross-entropy. A step that would raise the loss is
//! rejected and the learning rate halved, so accepted steps never increase it.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticRegression {
    /// C x d, row-major.
    weights: Matrix,
    bias: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRegOptions {
    pub l2: f64,
    pub lr: f64,
    pub max_iter: usize,
    pub tol: f64,
}

/// In-place softmax; returns log-sum-exp of the input.
pub(crate) fn softmax_in_place(z: &mut [f64]) -> f64 {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = libm::exp(*v - max);
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
    max + libm::log(sum)
}

impl LogisticRegression {
    pub fn zeros(n_features: usize, n_classes: usize) -> Self {
        LogisticRegression { weights: Matrix::zeros(n_classes, n_features), bias: alloc::vec![0.0; n_classes] }
    }

    pub fn n_features(&self) -> usize {
        self.weights.cols()
    }

    fn n_classes(&self) -> usize {
        self.weights.rows()
    }

    fn logits(&self, row: &[f64], out: &mut [f64]) {
        for (c, o) in out.iter_mut().enumerate() {
            let w = self.weights.row(c);
            let mut s = self.bias[c];
            for (a, b) in w.iter().zip(row) {
                s += a * b;
            }
            *o = s;
        }
    }

    /// Regularized loss and, when `grad` is given, its gradient (same layout as
    /// the parameters: weights then bias).
    pub fn loss_and_gradient(&self, x: &Matrix, y: &[usize], l2: f64, mut grad: Option<&mut LogisticRegression>) -> f64 {
        let c = self.n_classes();
        let n = x.rows() as f64;
        let mut z = alloc::vec![0.0; c];
        let mut loss = 0.0;
        if let Some(g) = grad.as_deref_mut() {
            *g = LogisticRegression::zeros(self.n_features(), c);
        }
        for (i, row) in x.iter_rows().enumerate() {
            self.logits(row, &mut z);
            let label = y[i];
            let zy = z[label];
            let lse = softmax_in_place(&mut z);
            loss += lse - zy;
            if let Some(g) = grad.as_deref_mut() {
                z[label] -= 1.0;
                for (k, &delta) in z.iter().enumerate() {
                    if delta == 0.0 {
                        continue;
                    }
                    for (gw, xv) in g.weights.row_mut(k).iter_mut().zip(row) {
                        *gw += delta * xv;
                    }
                    g.bias[k] += delta;
                }
            }
        }
        let penalty: f64 = self.weights.as_slice().iter().map(|w| w * w).sum::<f64>() * 0.5 * l2;
        if let Some(g) = grad {
            for k in 0..c {
                for (gw, w) in g.weights.row_mut(k).iter_mut().zip(self.weights.row(k)) {
                    *gw = *gw / n + l2 * w;
                }
                g.bias[k] /= n;
            }
        }
        loss / n + penalty
    }

    fn stepped(&self, grad: &LogisticRegression, lr: f64) -> LogisticRegression {
        let mut next = self.clone();
        for k in 0..self.n_classes() {
            for (w, g) in next.weights.row_mut(k).iter_mut().zip(grad.weights.row(k)) {
                *w -= lr * g;
            }
            next.bias[k] -= lr * grad.bias[k];
        }
        next
    }

    /// Fits from zero initialization. Returns the model and the loss after
    /// every accepted step (first entry: the initial loss).
    pub fn fit(x: &Matrix, y: &[usize], n_classes: usize, opts: LogRegOptions) -> Result<(Self, Vec<f64>)> {
        let mut model = LogisticRegression::zeros(x.cols(), n_classes);
        let mut grad = LogisticRegression::zeros(x.cols(), n_classes);
        let mut loss = model.loss_and_gradient(x, y, opts.l2, Some(&mut grad));
        if !loss.is_finite() {
            return Err(Error::Divergence { model: "logistic regression", iteration: 0 });
        }
        let mut history = alloc::vec![loss];
        let mut lr = opts.lr;
        let mut next_grad = LogisticRegression::zeros(x.cols(), n_classes);
        for iteration in 1..=opts.max_iter {
            let candidate = model.stepped(&grad, lr);
            let next_loss = candidate.loss_and_gradient(x, y, opts.l2, Some(&mut next_grad));
            if !next_loss.is_finite() {
                return Err(Error::Divergence { model: "logistic regression", iteration });
            }
            if next_loss > loss {
                lr *= 0.5;
                if lr < 1e-12 {
                    break;
                }
                continue;
            }
            let improvement = loss - next_loss;
            model = candidate;
            core::mem::swap(&mut grad, &mut next_grad);
            loss = next_loss;
            history.push(loss);
            if improvement < opts.tol {
                break;
            }
        }
        Ok((model, history))
    }

    pub fn predict_proba(&self, x: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(x.rows(), self.n_classes());
        for i in 0..x.rows() {
            let row = out.row_mut(i);
            self.logits(x.row(i), row);
            softmax_in_place(row);
        }
        out
    }
}
