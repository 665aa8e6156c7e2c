//! From-scratch classifiers behind one fit/predict surface.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::derive_seed;

pub mod forest;
pub mod knn;
pub mod logreg;
pub mod mlp;
pub mod tree;
pub mod validation;

pub use forest::RandomForest;
pub use knn::Knn;
pub use logreg::{LogRegOptions, LogisticRegression};
pub use mlp::{MlpNetwork, MlpOptions};
pub use validation::{cross_validate, grid_search, learning_curve, CvOutcome, GridOutcome, LearningCurvePoint};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RfHyperParams {
    pub n_estimators: usize,
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    /// The forest's own random state; bootstrap and feature draws derive from it.
    pub seed: u64,
}

impl Default for RfHyperParams {
    fn default() -> Self {
        RfHyperParams { n_estimators: 100, max_depth: 10, min_samples_split: 5, min_samples_leaf: 2, seed: 42 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    RandomForest(RfHyperParams),
    Knn { k: usize },
    LogReg { l2: f64, lr: f64, max_iter: usize, tol: f64 },
    Mlp { hidden: usize, lr: f64, momentum: f64, batch: usize, max_epochs: usize, patience: usize },
    SoftVoting { members: Vec<ModelSpec> },
}

impl ModelSpec {
    /// Short family tag used in file names and reports.
    pub fn family(&self) -> &'static str {
        match self {
            ModelSpec::RandomForest(_) => "rf",
            ModelSpec::Knn { .. } => "knn",
            ModelSpec::LogReg { .. } => "lr",
            ModelSpec::Mlp { .. } => "mlp",
            ModelSpec::SoftVoting { .. } => "voting",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.into()));
        match self {
            ModelSpec::RandomForest(p) => {
                if p.n_estimators < 1 || p.max_depth < 1 || p.min_samples_split < 2 || p.min_samples_leaf < 1 {
                    return bad("random forest needs n_estimators >= 1, max_depth >= 1, min_samples_split >= 2, min_samples_leaf >= 1");
                }
            }
            ModelSpec::Knn { k } if *k < 1 => return bad("knn needs k >= 1"),
            ModelSpec::Knn { .. } => {}
            ModelSpec::LogReg { l2, lr, max_iter, tol } => {
                if !(*l2 >= 0.0 && *lr > 0.0 && *max_iter >= 1 && *tol > 0.0) {
                    return bad("logistic regression needs l2 >= 0, lr > 0, max_iter >= 1, tol > 0");
                }
            }
            ModelSpec::Mlp { hidden, lr, momentum, batch, max_epochs, patience } => {
                if *hidden < 1 || !(*lr > 0.0) || !(0.0..1.0).contains(momentum) || *batch < 1 || *max_epochs < 1 || *patience < 1 {
                    return bad("mlp needs hidden, batch, max_epochs, patience >= 1, lr > 0, momentum in [0, 1)");
                }
            }
            ModelSpec::SoftVoting { members } => {
                if members.is_empty() {
                    return bad("soft voting needs at least one member");
                }
                members.iter().try_for_each(ModelSpec::validate)?;
            }
        }
        Ok(())
    }

    fn needs_two_classes(&self) -> bool {
        match self {
            ModelSpec::LogReg { .. } | ModelSpec::Mlp { .. } => true,
            ModelSpec::SoftVoting { members } => members.iter().any(ModelSpec::needs_two_classes),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "state", rename_all = "snake_case")]
pub enum FittedModel {
    RandomForest(RandomForest),
    Knn(Knn),
    LogReg(LogisticRegression),
    Mlp(MlpNetwork),
    SoftVoting(Vec<FittedModel>),
}

impl FittedModel {
    fn predict_proba(&self, x: &Matrix) -> Matrix {
        match self {
            FittedModel::RandomForest(m) => m.predict_proba(x),
            FittedModel::Knn(m) => m.predict_proba(x),
            FittedModel::LogReg(m) => m.predict_proba(x),
            FittedModel::Mlp(m) => m.predict_proba(x),
            FittedModel::SoftVoting(members) => {
                let probs: Vec<Matrix> = members.iter().map(|m| m.predict_proba(x)).collect();
                let k = probs.len() as f64;
                let mut out = Matrix::zeros(x.rows(), probs[0].cols());
                for i in 0..x.rows() {
                    for p in &probs {
                        for (o, v) in out.row_mut(i).iter_mut().zip(p.row(i)) {
                            *o += v;
                        }
                    }
                    out.row_mut(i).iter_mut().for_each(|o| *o /= k);
                }
                out
            }
        }
    }
}

/// A fitted classifier with the schema it expects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub spec: ModelSpec,
    pub state: FittedModel,
    pub n_classes: usize,
    pub expected_features: Vec<String>,
    pub class_names: Vec<String>,
    /// Wall-clock fit time, filled in by the caller that owns a clock.
    #[serde(skip)]
    pub training_time_s: f64,
}

fn fit_state(spec: &ModelSpec, x: &Matrix, y: &[usize], n_classes: usize, seed: u64) -> Result<FittedModel> {
    Ok(match spec {
        ModelSpec::RandomForest(hp) => FittedModel::RandomForest(RandomForest::fit(x, y, n_classes, hp).0),
        ModelSpec::Knn { k } => FittedModel::Knn(Knn::fit(x, y, n_classes, *k)),
        ModelSpec::LogReg { l2, lr, max_iter, tol } => {
            let opts = LogRegOptions { l2: *l2, lr: *lr, max_iter: *max_iter, tol: *tol };
            FittedModel::LogReg(LogisticRegression::fit(x, y, n_classes, opts)?.0)
        }
        ModelSpec::Mlp { hidden, lr, momentum, batch, max_epochs, patience } => {
            let opts = MlpOptions {
                hidden: *hidden,
                lr: *lr,
                momentum: *momentum,
                batch: *batch,
                max_epochs: *max_epochs,
                patience: *patience,
            };
            FittedModel::Mlp(MlpNetwork::fit(x, y, n_classes, opts, seed)?.0)
        }
        ModelSpec::SoftVoting { members } => FittedModel::SoftVoting(
            members
                .iter()
                .enumerate()
                .map(|(i, m)| fit_state(m, x, y, n_classes, derive_seed(seed, i as u64)))
                .collect::<Result<_>>()?,
        ),
    })
}

/// Fits `spec` on `train`. Deterministic in (spec, train, seed); the forest
/// draws from its own `seed` hyperparameter instead.
pub fn fit_classifier(spec: &ModelSpec, train: &Dataset, seed: u64) -> Result<TrainedModel> {
    spec.validate()?;
    if train.n_rows() < 2 {
        return Err(Error::EmptyDataset);
    }
    if spec.needs_two_classes() && train.n_classes() < 2 {
        return Err(Error::InvalidParameter(alloc::format!("{} needs at least two classes", spec.family())));
    }
    let state = fit_state(spec, train.x(), train.y(), train.n_classes(), seed)?;
    Ok(TrainedModel {
        spec: spec.clone(),
        state,
        n_classes: train.n_classes(),
        expected_features: train.feature_names().to_vec(),
        class_names: train.class_names().to_vec(),
        training_time_s: 0.0,
    })
}

impl TrainedModel {
    /// Row-stochastic class probabilities, one row per input row.
    pub fn predict_proba(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.expected_features.len() {
            return Err(Error::DimensionMismatch { expected: self.expected_features.len(), found: x.cols() });
        }
        Ok(self.state.predict_proba(x))
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<usize>> {
        Ok(self.predict_proba(x)?.iter_rows().map(argmax).collect())
    }

    /// Checks that `names` match the features the model was trained on.
    pub fn check_features(&self, names: &[String]) -> Result<()> {
        if names != self.expected_features.as_slice() {
            return Err(Error::FeatureMismatch { expected: self.expected_features.clone(), found: names.to_vec() });
        }
        Ok(())
    }

    /// Like [`predict_proba`](Self::predict_proba) but also checks feature names.
    pub fn predict_proba_dataset(&self, ds: &Dataset) -> Result<Matrix> {
        self.check_features(ds.feature_names())?;
        self.predict_proba(ds.x())
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

pub fn accuracy(y_true: &[usize], y_pred: &[usize]) -> f64 {
    let hits = y_true.iter().zip(y_pred).filter(|(a, b)| a == b).count();
    hits as f64 / y_true.len() as f64
}
