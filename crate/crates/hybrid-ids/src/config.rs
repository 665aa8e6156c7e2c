//! The JSON pipeline configuration.

use std::path::{Path, PathBuf};

use hybrid_ids_core::models::{ModelSpec, RfHyperParams};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Directory that relative `data_path` values resolve against when set.
pub const DATA_DIR_ENV: &str = "HYBRID_IDS_DATA_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Outlier removal, standardization and RFE run before the split.
    PaperOrder,
    /// Those three stages are fitted on the training split and applied to test.
    LeakFree,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelFamily {
    Rf,
    Knn,
    Lr,
    Mlp,
    Voting,
}

impl ModelFamily {
    pub fn name(self) -> &'static str {
        match self {
            ModelFamily::Rf => "rf",
            ModelFamily::Knn => "knn",
            ModelFamily::Lr => "lr",
            ModelFamily::Mlp => "mlp",
            ModelFamily::Voting => "voting",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "rf" => Ok(ModelFamily::Rf),
            "knn" => Ok(ModelFamily::Knn),
            "lr" => Ok(ModelFamily::Lr),
            "mlp" => Ok(ModelFamily::Mlp),
            "voting" => Ok(ModelFamily::Voting),
            _ => Err(Error::Config(format!("unknown model family `{s}` (expected rf, knn, lr, mlp or voting)"))),
        }
    }
}

/// Candidate hyperparameters searched per family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelGrids {
    pub rf: Vec<ModelSpec>,
    pub knn: Vec<ModelSpec>,
    pub lr: Vec<ModelSpec>,
    pub mlp: Vec<ModelSpec>,
}

impl Default for ModelGrids {
    fn default() -> Self {
        ModelGrids {
            rf: vec![ModelSpec::RandomForest(RfHyperParams::default())],
            knn: [3, 5, 7, 9].into_iter().map(|k| ModelSpec::Knn { k }).collect(),
            lr: [1e-4, 1e-2].into_iter().map(|l2| ModelSpec::LogReg { l2, lr: 0.1, max_iter: 500, tol: 1e-6 }).collect(),
            mlp: [50, 100]
                .into_iter()
                .map(|hidden| ModelSpec::Mlp { hidden, lr: 0.001, momentum: 0.9, batch: 200, max_epochs: 200, patience: 10 })
                .collect(),
        }
    }
}

impl ModelGrids {
    pub fn get(&self, family: ModelFamily) -> &[ModelSpec] {
        match family {
            ModelFamily::Rf => &self.rf,
            ModelFamily::Knn => &self.knn,
            ModelFamily::Lr => &self.lr,
            ModelFamily::Mlp => &self.mlp,
            ModelFamily::Voting => &[],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub data_path: PathBuf,
    pub target_column: String,
    pub categorical_columns: Vec<String>,
    /// Columns discarded right after loading, such as a row index.
    pub drop_columns: Vec<String>,
    pub mode: Mode,
    pub z_threshold: f64,
    pub test_fraction: f64,
    pub rfe_k: usize,
    pub rfe_step: usize,
    pub rfe_max_rows: usize,
    pub resample_target: usize,
    pub k_neighbors: usize,
    pub cv_folds: usize,
    pub seed: u64,
    /// Families trained, in report order.
    pub models: Vec<ModelFamily>,
    pub grids: ModelGrids,
    /// Families whose tuned specs form the soft-voting ensemble.
    pub voting_members: Vec<ModelFamily>,
    /// Learning-curve fractions; empty disables curves.
    pub curve_fractions: Vec<f64>,
    pub output_dir: PathBuf,
    /// Store the origin of every synthetic row in the report.
    pub record_provenance: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            data_path: PathBuf::from("RT_IOT2022.csv"),
            target_column: "Attack_type".into(),
            categorical_columns: vec!["proto".into(), "service".into()],
            drop_columns: Vec::new(),
            mode: Mode::PaperOrder,
            z_threshold: 3.0,
            test_fraction: 0.2,
            rfe_k: 20,
            rfe_step: 1,
            rfe_max_rows: 20_000,
            resample_target: 10_000,
            k_neighbors: 5,
            cv_folds: 5,
            seed: 42,
            models: vec![ModelFamily::Rf, ModelFamily::Knn, ModelFamily::Lr, ModelFamily::Mlp, ModelFamily::Voting],
            grids: ModelGrids::default(),
            voting_members: vec![ModelFamily::Rf, ModelFamily::Knn, ModelFamily::Lr, ModelFamily::Mlp],
            curve_fractions: (1..=10).map(|i| i as f64 / 10.0).collect(),
            output_dir: PathBuf::from("out"),
            record_provenance: false,
        }
    }
}

impl PipelineConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// `data_path`, resolved against `HYBRID_IDS_DATA_DIR` when relative.
    pub fn resolved_data_path(&self) -> PathBuf {
        match std::env::var_os(DATA_DIR_ENV) {
            Some(dir) if self.data_path.is_relative() => Path::new(&dir).join(&self.data_path),
            _ => self.data_path.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return bad(format!("test_fraction {} must lie in (0, 1)", self.test_fraction));
        }
        if !(self.z_threshold > 0.0 && self.z_threshold.is_finite()) {
            return bad(format!("z_threshold {} must be positive", self.z_threshold));
        }
        for (name, v) in [
            ("rfe_k", self.rfe_k),
            ("rfe_step", self.rfe_step),
            ("rfe_max_rows", self.rfe_max_rows),
            ("resample_target", self.resample_target),
            ("k_neighbors", self.k_neighbors),
        ] {
            if v == 0 {
                return bad(format!("{name} must be positive"));
            }
        }
        if self.cv_folds < 2 {
            return bad(format!("cv_folds must be at least 2, got {}", self.cv_folds));
        }
        if self.models.is_empty() {
            return bad("models must name at least one family".into());
        }
        let mut seen = self.models.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.models.len() {
            return bad("models lists a family twice".into());
        }
        for &f in &self.models {
            if f == ModelFamily::Voting {
                if self.voting_members.is_empty() || self.voting_members.contains(&ModelFamily::Voting) {
                    return bad("voting_members must name one or more non-voting families".into());
                }
                continue;
            }
            let grid = self.grids.get(f);
            if grid.is_empty() {
                return bad(format!("grid for `{}` is empty", f.name()));
            }
            for spec in grid {
                if spec.family() != f.name() {
                    return bad(format!("grid for `{}` contains a `{}` spec", f.name(), spec.family()));
                }
                spec.validate().map_err(|e| Error::Config(e.to_string()))?;
            }
        }
        for &m in &self.voting_members {
            if self.models.contains(&ModelFamily::Voting) && self.grids.get(m).is_empty() {
                return bad(format!("voting member `{}` has an empty grid", m.name()));
            }
        }
        if self.curve_fractions.iter().any(|&f| !(f > 0.0 && f <= 1.0)) || self.curve_fractions.windows(2).any(|w| w[1] <= w[0]) {
            return bad("curve_fractions must be ascending values in (0, 1]".into());
        }
        Ok(())
    }
}
