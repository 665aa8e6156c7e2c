//! Confusion matrix, precision/recall/F1 with macro and weighted averages,
//! Cohen's kappa and one-vs-rest macro ROC AUC.
//!
//! Undefined ratios (no predictions of a class, class absent from truth)
//! evaluate to 0 and set a flag; no metric is ever NaN.

use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    n_classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn from_counts(n_classes: usize, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != n_classes * n_classes {
            return Err(Error::DimensionMismatch { expected: n_classes * n_classes, found: counts.len() });
        }
        Ok(ConfusionMatrix { n_classes, counts })
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.n_classes + predicted]
    }

    pub fn row(&self, truth: usize) -> &[u64] {
        &self.counts[truth * self.n_classes..(truth + 1) * self.n_classes]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.n_classes).map(|c| self.get(c, c)).sum()
    }

    pub fn row_sums(&self) -> Vec<u64> {
        (0..self.n_classes).map(|c| self.row(c).iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<u64> {
        (0..self.n_classes).map(|c| (0..self.n_classes).map(|r| self.get(r, c)).sum()).collect()
    }
}

pub fn confusion_matrix(y_true: &[usize], y_pred: &[usize], n_classes: usize) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(Error::DimensionMismatch { expected: y_true.len(), found: y_pred.len() });
    }
    let mut counts = alloc::vec![0u64; n_classes * n_classes];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        for label in [t, p] {
            if label >= n_classes {
                return Err(Error::LabelOutOfRange { label, n_classes });
            }
        }
        counts[t * n_classes + p] += 1;
    }
    Ok(ConfusionMatrix { n_classes, counts })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
    /// The class was never predicted, so precision is undefined (reported 0).
    pub precision_zero_division: bool,
    /// The class never occurs in the truth, so recall is undefined (reported 0).
    pub recall_zero_division: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub accuracy: f64,
    pub per_class: Vec<ClassMetrics>,
    pub macro_precision: f64,
    pub weighted_precision: f64,
    pub macro_recall: f64,
    pub weighted_recall: f64,
    pub macro_f1: f64,
    pub weighted_f1: f64,
}

fn ratio(num: u64, den: u64) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

/// Per-class and averaged precision, recall and F1. Macro averages run over
/// classes present in the truth; weighted averages use truth support.
pub fn classification_report(cm: &ConfusionMatrix) -> Result<ClassificationReport> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::EmptyDataset);
    }
    let rows = cm.row_sums();
    let cols = cm.col_sums();
    let per_class: Vec<ClassMetrics> = (0..cm.n_classes())
        .map(|c| {
            let tp = cm.get(c, c);
            let (precision, pz) = ratio(tp, cols[c]);
            let (recall, rz) = ratio(tp, rows[c]);
            let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
            ClassMetrics { precision, recall, f1, support: rows[c], precision_zero_division: pz, recall_zero_division: rz }
        })
        .collect();
    let present: Vec<&ClassMetrics> = per_class.iter().filter(|m| m.support > 0).collect();
    let macro_of = |f: fn(&ClassMetrics) -> f64| present.iter().map(|m| f(m)).sum::<f64>() / present.len() as f64;
    let weighted_of = |f: fn(&ClassMetrics) -> f64| per_class.iter().map(|m| f(m) * m.support as f64).sum::<f64>() / total as f64;
    Ok(ClassificationReport {
        accuracy: cm.trace() as f64 / total as f64,
        macro_precision: macro_of(|m| m.precision),
        weighted_precision: weighted_of(|m| m.precision),
        macro_recall: macro_of(|m| m.recall),
        weighted_recall: weighted_of(|m| m.recall),
        macro_f1: macro_of(|m| m.f1),
        weighted_f1: weighted_of(|m| m.f1),
        per_class,
    })
}

/// `(p_o - p_e) / (1 - p_e)` with chance agreement from the marginals.
pub fn cohen_kappa(cm: &ConfusionMatrix) -> Result<f64> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::EmptyDataset);
    }
    let n = total as f64;
    let p_o = cm.trace() as f64 / n;
    let p_e = cm.row_sums().iter().zip(cm.col_sums()).map(|(&r, c)| r as f64 * c as f64).sum::<f64>() / (n * n);
    if p_e >= 1.0 {
        // Only reachable when every count sits in one diagonal cell.
        return Ok(if p_o >= 1.0 { 1.0 } else { 0.0 });
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half, via midranks.
pub fn binary_auc(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_unstable_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        // Ranks i+1 ..= j share their mean.
        let mid = (i + 1 + j) as f64 / 2.0;
        let pos_here = order[i..j].iter().filter(|&&k| positive[k]).count();
        rank_sum += mid * pos_here as f64;
        i = j;
    }
    let np = n_pos as f64;
    Some((rank_sum - np * (np + 1.0) / 2.0) / (np * n_neg as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AucReport {
    pub macro_auc: f64,
    /// `None` for classes without both positives and negatives in the truth.
    pub per_class: Vec<Option<f64>>,
    pub skipped_classes: Vec<usize>,
}

/// One-vs-rest AUC of every eligible class, averaged without weights.
pub fn roc_auc_ovr_macro(y_true: &[usize], proba: &Matrix) -> Result<AucReport> {
    if y_true.len() != proba.rows() {
        return Err(Error::DimensionMismatch { expected: y_true.len(), found: proba.rows() });
    }
    for (i, r) in proba.iter_rows().enumerate() {
        let s: f64 = r.iter().sum();
        if !s.is_finite() || (s - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidParameter(alloc::format!("probability row {i} sums to {s}")));
        }
    }
    if let Some(&label) = y_true.iter().find(|&&l| l >= proba.cols()) {
        return Err(Error::LabelOutOfRange { label, n_classes: proba.cols() });
    }
    let mut per_class = Vec::with_capacity(proba.cols());
    let mut skipped_classes = Vec::new();
    for c in 0..proba.cols() {
        let positive: Vec<bool> = y_true.iter().map(|&l| l == c).collect();
        let auc = binary_auc(&proba.column(c), &positive);
        if auc.is_none() {
            skipped_classes.push(c);
        }
        per_class.push(auc);
    }
    let eligible: Vec<f64> = per_class.iter().flatten().copied().collect();
    if eligible.is_empty() {
        return Err(Error::NoEligibleClass);
    }
    Ok(AucReport { macro_auc: eligible.iter().sum::<f64>() / eligible.len() as f64, per_class, skipped_classes })
}

/// ROC points `(fpr, tpr)` for one class, thresholds descending, starting at (0, 0).
pub fn roc_curve(scores: &[f64], positive: &[bool]) -> Vec<(f64, f64)> {
    let n_pos = positive.iter().filter(|&&p| p).count().max(1) as f64;
    let n_neg = positive.iter().filter(|&&p| !p).count().max(1) as f64;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_unstable_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap_or(Ordering::Equal));
    let mut points = alloc::vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0.0, 0.0);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if positive[order[i]] {
                tp += 1.0;
            } else {
                fp += 1.0;
            }
            i += 1;
        }
        points.push((fp / n_neg, tp / n_pos));
    }
    points
}

/// Everything reported per model on the test split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub accuracy: f64,
    pub macro_precision: f64,
    pub weighted_precision: f64,
    pub macro_recall: f64,
    pub weighted_recall: f64,
    pub macro_f1: f64,
    pub weighted_f1: f64,
    pub kappa: f64,
    pub auc_ovr_macro: f64,
    pub per_class: Vec<ClassMetrics>,
    pub per_class_auc: Vec<Option<f64>>,
    pub auc_skipped_classes: Vec<usize>,
}

impl MetricReport {
    pub fn compute(y_true: &[usize], y_pred: &[usize], proba: &Matrix) -> Result<(MetricReport, ConfusionMatrix)> {
        let cm = confusion_matrix(y_true, y_pred, proba.cols())?;
        let cls = classification_report(&cm)?;
        let kappa = cohen_kappa(&cm)?;
        let auc = roc_auc_ovr_macro(y_true, proba)?;
        Ok((
            MetricReport {
                accuracy: cls.accuracy,
                macro_precision: cls.macro_precision,
                weighted_precision: cls.weighted_precision,
                macro_recall: cls.macro_recall,
                weighted_recall: cls.weighted_recall,
                macro_f1: cls.macro_f1,
                weighted_f1: cls.weighted_f1,
                kappa,
                auc_ovr_macro: auc.macro_auc,
                per_class: cls.per_class,
                per_class_auc: auc.per_class,
                auc_skipped_classes: auc.skipped_classes,
            },
            cm,
        ))
    }
}
