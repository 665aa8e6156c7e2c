//! End-to-end orchestration: preprocessing, resampling, tuning, evaluation
//! and artifact output.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use hybrid_ids_core::feature_select::{rfe_select, FeatureSubset, RfeOptions};
use hybrid_ids_core::metrics::MetricReport;
use hybrid_ids_core::models::{
    accuracy, argmax, fit_classifier, grid_search, learning_curve, CvOutcome, LearningCurvePoint, ModelSpec, TrainedModel,
};
use hybrid_ids_core::preprocess::{remove_outliers_zscore, OutlierReport, Standardizer};
use hybrid_ids_core::rng::{derive_seed, STREAM_CV, STREAM_FIT};
use hybrid_ids_core::sampling::{hybrid_resample, SamplingPlan, SyntheticOrigin};
use hybrid_ids_core::dataset::{encode, stratified_split};
use hybrid_ids_core::{Dataset, FeatureEncoding};
use serde::{Deserialize, Serialize};

use crate::config::{Mode, ModelFamily, PipelineConfig};
use crate::error::{Error, Result, StageExt};
use crate::io;
use crate::persist;

pub const REPORT_FILE: &str = "report.json";
pub const PREPROCESS_FILE: &str = "preprocess.json";
pub const TEST_SPLIT_FILE: &str = "test_split.csv";

pub const GRID_SEARCH_PROTOCOL: &str =
    "each family's grid is searched on the balanced training split with stratified k-fold cross-validation; \
     the best mean fold accuracy wins (ties to the earliest grid entry) and is refitted on the full balanced training split";
pub const AUC_SCHEME: &str = "one-vs-rest AUC per class from predicted probabilities, unweighted mean over classes \
     with both positives and negatives in the test split";

/// Everything needed to turn a raw table into model inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessArtifact {
    pub mode: Mode,
    pub encoding: FeatureEncoding,
    /// Fitted on every encoded feature, before selection.
    pub standardizer: Standardizer,
    pub subset: FeatureSubset,
    pub selected_features: Vec<String>,
}

impl PreprocessArtifact {
    /// Encodes, standardizes and selects the features of a raw table.
    pub fn transform(&self, table: &hybrid_ids_core::RawTable) -> Result<hybrid_ids_core::Matrix> {
        let x = self.encoding.transform_features(table)?;
        let z = self.standardizer.transform(&x)?;
        Ok(z.select_cols(&self.subset.selected))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRank {
    pub feature: String,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessingSummary {
    pub mode: Mode,
    pub rows_loaded: usize,
    pub features_encoded: usize,
    pub class_names: Vec<String>,
    pub class_counts_loaded: Vec<usize>,
    pub outliers: OutlierReport,
    pub rows_after_filtering: usize,
    pub classes_after_filtering: Vec<String>,
    pub selected_features: Vec<String>,
    pub feature_ranking: Vec<FeatureRank>,
    pub train_rows: usize,
    pub test_rows: usize,
    pub train_histogram_before_balancing: Vec<usize>,
    pub train_histogram_after_balancing: Vec<usize>,
    pub test_histogram: Vec<usize>,
    pub synthetic_rows: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Vec<SyntheticOrigin>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridEntry {
    pub spec: ModelSpec,
    pub cv: CvOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRecord {
    pub name: String,
    pub spec: ModelSpec,
    pub grid: Vec<GridEntry>,
    pub cv_score: f64,
    pub train_accuracy: f64,
    pub training_time_s: f64,
    pub test: MetricReport,
    pub confusion_matrix: Vec<Vec<u64>>,
    pub confusion_matrix_file: String,
    pub model_file: String,
    pub roc_file: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve_file: Option<String>,
    pub learning_curve: Vec<LearningCurvePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub software_version: String,
    pub config: PipelineConfig,
    pub grid_search_protocol: String,
    pub auc_scheme: String,
    pub preprocessing: PreprocessingSummary,
    pub models: Vec<ModelRecord>,
    pub preprocess_file: String,
    pub test_split_file: String,
    pub total_runtime_s: f64,
}

impl EvaluationReport {
    /// Copy with every wall-clock field zeroed, for determinism comparisons.
    pub fn without_timing(&self) -> EvaluationReport {
        let mut r = self.clone();
        r.total_runtime_s = 0.0;
        for m in &mut r.models {
            m.training_time_s = 0.0;
        }
        r
    }

    pub fn model(&self, name: &str) -> Option<&ModelRecord> {
        self.models.iter().find(|m| m.name == name)
    }

    /// Every file the report refers to, relative to the output directory.
    pub fn artifact_files(&self) -> Vec<String> {
        let mut files = vec![self.preprocess_file.clone(), self.test_split_file.clone()];
        for m in &self.models {
            files.extend([m.confusion_matrix_file.clone(), m.model_file.clone(), m.roc_file.clone()]);
            files.extend(m.curve_file.clone());
        }
        files
    }
}

/// Output of the shared stages that precede model training.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub preprocess: PreprocessArtifact,
    /// Balanced training split.
    pub train: Dataset,
    /// Untouched test split.
    pub test: Dataset,
    pub summary: PreprocessingSummary,
}

fn rfe_options(cfg: &PipelineConfig) -> RfeOptions {
    let mut opts = RfeOptions { step: cfg.rfe_step, max_rows: cfg.rfe_max_rows, ..RfeOptions::default() };
    opts.forest.seed = cfg.seed;
    opts
}

/// Load, encode, filter, standardize, select, split and balance.
pub fn prepare(cfg: &PipelineConfig) -> Result<Prepared> {
    cfg.validate()?;
    let path = cfg.resolved_data_path();
    let mut table = io::load_dataset(&path, &cfg.target_column, &cfg.categorical_columns).stage("load")?;
    table.drop_columns(&cfg.drop_columns).stage("load")?;
    log::info!("loaded {} rows from {}", table.n_rows(), path.display());
    let (full, encoding) = encode(&table, &cfg.target_column, &cfg.categorical_columns).stage("encode")?;
    if cfg.rfe_k > full.n_features() {
        return Err(Error::Config(format!("rfe_k {} exceeds the {} encoded features", cfg.rfe_k, full.n_features())));
    }
    let rows_loaded = full.n_rows();
    let class_counts_loaded = full.class_counts();

    let (filtered_rows, outliers, standardizer, subset, train, test) = match cfg.mode {
        Mode::PaperOrder => {
            let (filtered, outliers) = remove_outliers_zscore(&full, cfg.z_threshold).stage("outliers")?;
            let standardizer = Standardizer::fit(&filtered).stage("standardize")?;
            let z = standardizer.apply(&filtered).stage("standardize")?;
            log::info!("paper-order: {} rows after outlier removal", filtered.n_rows());
            let subset = rfe_select(&z, cfg.rfe_k, &rfe_options(cfg), cfg.seed).stage("rfe")?;
            log::info!("rfe kept {} features", subset.selected.len());
            let selected = z.select_features(&subset.selected);
            let split = stratified_split(&selected, cfg.test_fraction, cfg.seed).stage("split")?;
            (filtered.n_rows(), outliers, standardizer, subset, split.train, split.test)
        }
        Mode::LeakFree => {
            let split = stratified_split(&full, cfg.test_fraction, cfg.seed).stage("split")?;
            let (filtered, outliers) = remove_outliers_zscore(&split.train, cfg.z_threshold).stage("outliers")?;
            let standardizer = Standardizer::fit(&filtered).stage("standardize")?;
            let z_train = standardizer.apply(&filtered).stage("standardize")?;
            let z_test = standardizer.apply(&split.test).stage("standardize")?;
            let subset = rfe_select(&z_train, cfg.rfe_k, &rfe_options(cfg), cfg.seed).stage("rfe")?;
            let train = z_train.select_features(&subset.selected);
            let test = z_test.select_features(&subset.selected);
            (filtered.n_rows(), outliers, standardizer, subset, train, test)
        }
    };
    // Row indices are only meaningful in memory and are not serialized.
    let mut outliers = outliers;
    outliers.kept_rows = Vec::new();
    let classes_after_filtering = match cfg.mode {
        Mode::PaperOrder => {
            let remaining: Vec<usize> =
                class_counts_loaded.iter().zip(&outliers.removed_per_class).map(|(n, r)| n - r).collect();
            names_present(full.class_names(), &remaining)
        }
        Mode::LeakFree => names_present(full.class_names(), &train.class_counts()),
    };

    let plan = SamplingPlan {
        target_per_class: cfg.resample_target,
        k_neighbors: cfg.k_neighbors,
        seed: cfg.seed,
        record_provenance: cfg.record_provenance,
    };
    let resampled = hybrid_resample(&train, &plan).stage("resample")?;
    log::info!("balanced training split: {} rows", resampled.dataset.n_rows());
    let before = train.class_counts();
    let after = resampled.dataset.class_counts();
    let synthetic_rows = resampled.provenance.as_ref().map(Vec::len).unwrap_or_else(|| {
        before.iter().zip(&after).map(|(&b, &a)| a.saturating_sub(b)).sum()
    });
    let selected_features = subset.selected_names(full.feature_names());
    let feature_ranking = full
        .feature_names()
        .iter()
        .zip(&subset.ranking)
        .map(|(f, &rank)| FeatureRank { feature: f.clone(), rank })
        .collect();

    let summary = PreprocessingSummary {
        mode: cfg.mode,
        rows_loaded,
        features_encoded: full.n_features(),
        class_names: full.class_names().to_vec(),
        class_counts_loaded,
        outliers,
        rows_after_filtering: filtered_rows,
        classes_after_filtering,
        selected_features: selected_features.clone(),
        feature_ranking,
        train_rows: train.n_rows(),
        test_rows: test.n_rows(),
        train_histogram_before_balancing: before,
        train_histogram_after_balancing: after,
        test_histogram: test.class_counts(),
        synthetic_rows,
        provenance: resampled.provenance,
    };
    let preprocess = PreprocessArtifact { mode: cfg.mode, encoding, standardizer, subset, selected_features };
    Ok(Prepared { preprocess, train: resampled.dataset, test, summary })
}

fn names_present(names: &[String], counts: &[usize]) -> Vec<String> {
    names.iter().zip(counts).filter(|(_, &n)| n > 0).map(|(s, _)| s.clone()).collect()
}

/// Seeds used by the training stages, derived from the master seed.
pub fn cv_seed(cfg: &PipelineConfig) -> u64 {
    derive_seed(cfg.seed, STREAM_CV)
}

pub fn fit_seed(cfg: &PipelineConfig) -> u64 {
    derive_seed(cfg.seed, STREAM_FIT)
}

struct Tuned {
    spec: ModelSpec,
    grid: Vec<GridEntry>,
    cv_score: f64,
}

fn tune(grid: &[ModelSpec], train: &Dataset, cfg: &PipelineConfig) -> hybrid_ids_core::Result<Tuned> {
    let outcome = grid_search(grid, train, cfg.cv_folds, cv_seed(cfg))?;
    Ok(Tuned {
        spec: outcome.best_spec,
        cv_score: outcome.best_score,
        grid: grid.iter().cloned().zip(outcome.results).map(|(spec, cv)| GridEntry { spec, cv }).collect(),
    })
}

/// Runs every stage and writes the artifacts into `cfg.output_dir`. Files
/// are produced in a staging directory and moved into place only when all
/// stages succeed.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<EvaluationReport> {
    cfg.validate()?;
    let out = &cfg.output_dir;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e)).stage("write")?;
    let staging = out.join(format!(".staging-{}", std::process::id()));
    if staging.exists() {
        std::fs::remove_dir_all(&staging).map_err(|e| Error::io(&staging, e)).stage("write")?;
    }
    std::fs::create_dir(&staging).map_err(|e| Error::io(&staging, e)).stage("write")?;
    let result = run_into(cfg, &staging).and_then(|report| {
        publish(&staging, out, &report).stage("write")?;
        Ok(report)
    });
    let _ = std::fs::remove_dir_all(&staging);
    result
}

fn publish(staging: &Path, out: &Path, report: &EvaluationReport) -> Result<()> {
    let mut files = report.artifact_files();
    files.push(REPORT_FILE.to_string());
    for f in files {
        let from = staging.join(&f);
        let to = out.join(&f);
        std::fs::rename(&from, &to).map_err(|e| Error::io(&to, e))?;
    }
    Ok(())
}

fn run_into(cfg: &PipelineConfig, dir: &Path) -> Result<EvaluationReport> {
    let started = Instant::now();
    let prepared = prepare(cfg)?;
    let Prepared { preprocess, train, test, summary } = prepared;

    let mut tuned: BTreeMap<ModelFamily, Tuned> = BTreeMap::new();
    for &family in cfg.models.iter().filter(|&&f| f != ModelFamily::Voting) {
        let stage = format!("grid-search:{}", family.name());
        tuned.insert(family, tune(cfg.grids.get(family), &train, cfg).stage(&stage)?);
        log::info!("{}: grid search done", family.name());
    }
    if cfg.models.contains(&ModelFamily::Voting) {
        let members = cfg
            .voting_members
            .iter()
            .map(|m| tuned.get(m).map(|t| t.spec.clone()).unwrap_or_else(|| cfg.grids.get(*m)[0].clone()))
            .collect();
        let grid = [ModelSpec::SoftVoting { members }];
        tuned.insert(ModelFamily::Voting, tune(&grid, &train, cfg).stage("grid-search:voting")?);
    }

    io::write_split_csv(&dir.join(TEST_SPLIT_FILE), &test).stage("write")?;
    io::write_json(&dir.join(PREPROCESS_FILE), &preprocess).stage("write")?;

    let mut models = Vec::with_capacity(cfg.models.len());
    for &family in &cfg.models {
        let t = tuned.remove(&family).expect("every family was tuned");
        models.push(train_and_evaluate(cfg, family, t, &train, &test, dir)?);
    }

    let report = EvaluationReport {
        software_version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        grid_search_protocol: GRID_SEARCH_PROTOCOL.to_string(),
        auc_scheme: AUC_SCHEME.to_string(),
        preprocessing: summary,
        models,
        preprocess_file: PREPROCESS_FILE.to_string(),
        test_split_file: TEST_SPLIT_FILE.to_string(),
        total_runtime_s: started.elapsed().as_secs_f64(),
    };
    io::write_json(&dir.join(REPORT_FILE), &report).stage("write")?;
    Ok(report)
}

fn train_and_evaluate(
    cfg: &PipelineConfig,
    family: ModelFamily,
    tuned: Tuned,
    train: &Dataset,
    test: &Dataset,
    dir: &Path,
) -> Result<ModelRecord> {
    let name = family.name();
    let started = Instant::now();
    let mut model = fit_classifier(&tuned.spec, train, fit_seed(cfg)).stage(&format!("train:{name}"))?;
    model.training_time_s = started.elapsed().as_secs_f64();
    log::info!("{name}: fitted in {:.2} s", model.training_time_s);

    let eval_stage = format!("evaluate:{name}");
    let train_pred = model.predict(train.x()).stage(&eval_stage)?;
    let train_accuracy = accuracy(train.y(), &train_pred);
    let (test_metrics, cm) = evaluate(&model, test).stage(&eval_stage)?;

    let learning_curve = if cfg.curve_fractions.is_empty() {
        Vec::new()
    } else {
        // The full-data point is the tuned model itself: its CV score came
        // from the grid search on the same rows and seed.
        let partial: Vec<f64> = cfg.curve_fractions.iter().copied().filter(|&f| f < 1.0).collect();
        let mut points = learning_curve(&tuned.spec, train, &partial, cfg.cv_folds, cv_seed(cfg)).stage(&format!("curve:{name}"))?;
        if partial.len() < cfg.curve_fractions.len() {
            points.push(LearningCurvePoint {
                fraction: 1.0,
                n_rows: train.n_rows(),
                train_accuracy,
                cv_accuracy: tuned.cv_score,
            });
        }
        points
    };
    log::info!("{name}: evaluation and learning curve done");
    let files = ArtifactNames::for_model(name);
    let write = |r: Result<()>| r.stage("write");
    write(io::write_confusion_csv(&dir.join(&files.confusion), &cm, test.class_names()))?;
    write(persist::save_model(&model, &dir.join(&files.model)))?;
    let proba = model.predict_proba(test.x()).stage(&eval_stage)?;
    write(io::write_roc_csv(&dir.join(&files.roc), test.y(), &proba, test.class_names()))?;
    let curve_file = if learning_curve.is_empty() {
        None
    } else {
        write(io::write_curve_csv(&dir.join(&files.curve), &learning_curve))?;
        Some(files.curve.clone())
    };

    Ok(ModelRecord {
        name: name.to_string(),
        spec: tuned.spec,
        grid: tuned.grid,
        cv_score: tuned.cv_score,
        train_accuracy,
        training_time_s: model.training_time_s,
        test: test_metrics,
        confusion_matrix: (0..cm.n_classes()).map(|c| cm.row(c).to_vec()).collect(),
        confusion_matrix_file: files.confusion,
        model_file: files.model,
        roc_file: files.roc,
        curve_file,
        learning_curve,
    })
}

/// Test-split metrics of a fitted model.
pub fn evaluate(
    model: &TrainedModel,
    test: &Dataset,
) -> hybrid_ids_core::Result<(MetricReport, hybrid_ids_core::metrics::ConfusionMatrix)> {
    let proba = model.predict_proba_dataset(test)?;
    let pred: Vec<usize> = proba.iter_rows().map(argmax).collect();
    MetricReport::compute(test.y(), &pred, &proba)
}

pub struct ArtifactNames {
    pub confusion: String,
    pub model: String,
    pub roc: String,
    pub curve: String,
}

impl ArtifactNames {
    pub fn for_model(name: &str) -> Self {
        ArtifactNames {
            confusion: format!("cm_{name}.csv"),
            model: format!("model_{name}.json"),
            roc: format!("roc_{name}.csv"),
            curve: format!("curve_{name}.csv"),
        }
    }
}

/// Learning curve of one family's first grid entry on the prepared training
/// split, written to `out`.
pub fn run_learning_curve(cfg: &PipelineConfig, family: ModelFamily, out: &Path) -> Result<Vec<LearningCurvePoint>> {
    if family == ModelFamily::Voting {
        return Err(Error::Config("learning-curve takes a single family, not voting".into()));
    }
    if cfg.curve_fractions.is_empty() {
        return Err(Error::Config("curve_fractions is empty".into()));
    }
    let prepared = prepare(cfg)?;
    let spec = cfg.grids.get(family).first().cloned().ok_or_else(|| Error::Config(format!("grid for `{}` is empty", family.name())))?;
    let points = learning_curve(&spec, &prepared.train, &cfg.curve_fractions, cfg.cv_folds, cv_seed(cfg)).stage("curve")?;
    io::write_curve_csv(out, &points).stage("write")?;
    Ok(points)
}

pub fn report_path(dir: &Path) -> PathBuf {
    dir.join(REPORT_FILE)
}
