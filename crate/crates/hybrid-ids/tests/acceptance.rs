//! Acceptance suite. Every test prints one line:
//! `ACCEPTANCE <n> <name>: PASS|FAIL|NOT RUN <details>`.
//!
//! Criteria 1 and 8 need the public RT-IoT2022 CSV. Point
//! `HYBRID_IDS_RT_IOT2022` at it, or place `RT_IOT2022.csv` under
//! `HYBRID_IDS_DATA_DIR`; otherwise they report NOT RUN.

mod common;

use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use hybrid_ids::audit::audit;
use hybrid_ids::config::{ModelFamily, PipelineConfig};
use hybrid_ids::ingest::{ingest_check, RT_IOT2022_CLASS_COUNTS};
use hybrid_ids::pipeline::{prepare, REPORT_FILE};
use hybrid_ids::run_pipeline;
use hybrid_ids_core::dataset::stratified_split;
use hybrid_ids_core::metrics::{
    classification_report, cohen_kappa, confusion_matrix, roc_auc_ovr_macro, ConfusionMatrix,
};
use hybrid_ids_core::models::MlpNetwork;
use hybrid_ids_core::rng::rng_for;
use hybrid_ids_core::sampling::{hybrid_resample, SamplingPlan};
use hybrid_ids_core::{Dataset, Matrix};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

// Tests in one binary share the CPU; serializing them keeps timings honest.
static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn verdict(n: u32, name: &str, pass: bool, details: &str) {
    println!("ACCEPTANCE {n} {name}: {} {details}", if pass { "PASS" } else { "FAIL" });
}

fn not_run(n: u32, name: &str, why: &str) {
    println!("ACCEPTANCE {n} {name}: NOT RUN {why}");
}

fn rt_iot_path() -> Option<PathBuf> {
    if let Some(p) = std::env::var_os("HYBRID_IDS_RT_IOT2022") {
        return Some(PathBuf::from(p));
    }
    let p = Path::new(&std::env::var_os(hybrid_ids::config::DATA_DIR_ENV)?).join("RT_IOT2022.csv");
    p.is_file().then_some(p)
}

/// Defaults, plus dropping an unnamed leading index column if the file has one.
fn rt_iot_config(path: &Path, out: &Path) -> PipelineConfig {
    let first = std::fs::read_to_string(path).ok().and_then(|t| t.lines().next().map(str::to_string)).unwrap_or_default();
    let index_cols: Vec<String> =
        first.split(',').filter(|h| h.is_empty() || *h == "Unnamed: 0").map(str::to_string).collect();
    PipelineConfig {
        data_path: path.to_path_buf(),
        drop_columns: index_cols,
        output_dir: out.to_path_buf(),
        ..PipelineConfig::default()
    }
}

#[test]
fn criterion_1_ingestion() {
    let _g = serial();
    let name = "ingestion check";
    let Some(path) = rt_iot_path() else {
        return not_run(1, name, "(RT-IoT2022 CSV not available; set HYBRID_IDS_RT_IOT2022)");
    };
    let dir = tempfile::tempdir().unwrap();
    let cfg = rt_iot_config(&path, dir.path());
    let s = ingest_check(&cfg, &path).unwrap();
    let mut counts: Vec<usize> = s.class_counts.values().copied().collect();
    counts.sort_unstable_by(|a, b| b.cmp(a));
    let pass = s.rows == 123_117 && counts == RT_IOT2022_CLASS_COUNTS && s.elapsed_s < 30.0;
    verdict(1, name, pass, &format!("(rows {}, counts {:?}, {:.1} s)", s.rows, s.class_counts, s.elapsed_s));
    assert!(pass);
}

/// Synthetic data with the published class distribution.
fn imbalanced_dataset(d: usize, seed: u64) -> Dataset {
    let mut r = rng_for(seed, &[]);
    let mut data = Vec::new();
    let mut y = Vec::new();
    for (c, &n) in RT_IOT2022_CLASS_COUNTS.iter().enumerate() {
        for _ in 0..n {
            for j in 0..d {
                let z: f64 = StandardNormal.sample(&mut r);
                data.push(z + if j % RT_IOT2022_CLASS_COUNTS.len() == c { 3.0 } else { 0.0 });
            }
            y.push(c);
        }
    }
    let x = Matrix::new(y.len(), d, data).unwrap();
    let names = (0..d).map(|j| format!("f{j}")).collect();
    let classes = (0..RT_IOT2022_CLASS_COUNTS.len()).map(|c| format!("c{c:02}")).collect();
    Dataset::new(x, y, names, classes).unwrap()
}

/// Least-squares position of `s` on the line through `p` and `q`, and the
/// largest coordinate of the remaining offset.
fn segment_fit(s: &[f64], p: &[f64], q: &[f64]) -> (f64, f64) {
    let dir: Vec<f64> = q.iter().zip(p).map(|(a, b)| a - b).collect();
    let len2: f64 = dir.iter().map(|v| v * v).sum();
    let off: Vec<f64> = s.iter().zip(p).map(|(a, b)| a - b).collect();
    let u = if len2 == 0.0 { 0.0 } else { off.iter().zip(&dir).map(|(a, b)| a * b).sum::<f64>() / len2 };
    let resid = off.iter().zip(&dir).map(|(o, d)| (o - u * d).abs()).fold(0.0, f64::max);
    (u, resid)
}

#[test]
fn criterion_2_balancing() {
    let _g = serial();
    let d = 12;
    let k = 5;
    let full = imbalanced_dataset(d, 2);
    let split = stratified_split(&full, 0.2, 42).unwrap();
    let train = split.train;
    let plan = SamplingPlan { target_per_class: 10_000, k_neighbors: k, seed: 42, record_provenance: true };
    let out = hybrid_resample(&train, &plan).unwrap();
    let counts = out.dataset.class_counts();
    let uniform = counts.iter().all(|&c| c == 10_000);

    let origins = out.provenance.unwrap();
    let mut picks: Vec<usize> = (0..origins.len()).collect();
    picks.shuffle(&mut rng_for(7, &[]));
    picks.truncate(1000);
    let mut worst_resid: f64 = 0.0;
    let mut structural = true;
    for &i in &picks {
        let o = origins[i];
        let s = out.dataset.x().row(o.row);
        let p = train.x().row(o.base);
        let q = train.x().row(o.neighbor);
        let (u, resid) = segment_fit(s, p, q);
        worst_resid = worst_resid.max(resid);
        let c = train.y()[o.base];
        // Same class, and the neighbour is among the base row's k nearest.
        let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
        let dq = dist(p, q);
        let closer = (0..train.n_rows())
            .filter(|&j| j != o.base && train.y()[j] == c && dist(p, train.x().row(j)) < dq)
            .count();
        structural &= out.dataset.y()[o.row] == c
            && train.y()[o.neighbor] == c
            && closer < k
            && (-1e-12..=1.0 + 1e-12).contains(&u);
    }
    let pass = uniform && worst_resid < 1e-9 && structural && picks.len() == 1000;
    verdict(
        2,
        "balancing",
        pass,
        &format!("(class counts {counts:?}, worst residual {worst_resid:.2e} over {} synthetic rows)", picks.len()),
    );
    assert!(pass);
}

/// 25 numeric features, 5 informative, and its matching configuration.
fn desk_blobs(dir: &Path) -> PipelineConfig {
    let p = dir.join("blobs.csv");
    common::write_blob_csv(&p, &common::BLOB_COUNTS, 5, 20, 4.0, 2024, false);
    let mut cfg = common::blob_config(&p, &dir.join("out"));
    cfg.categorical_columns.clear();
    cfg
}

#[test]
fn criterion_3_rfe_cardinality() {
    let _g = serial();
    let dir = tempfile::tempdir().unwrap();
    let cfg = desk_blobs(dir.path());
    assert_eq!(cfg.seed, 42);
    let a = prepare(&cfg).unwrap();
    let b = prepare(&cfg).unwrap();
    let pa = &a.preprocess;
    let same = pa.subset == b.preprocess.subset && pa.selected_features == b.preprocess.selected_features;
    let informative_kept = (0..5).all(|j| pa.selected_features.contains(&format!("f{j:02}")));
    let pass = pa.selected_features.len() == 20 && a.train.n_features() == 20 && same && informative_kept;
    verdict(
        3,
        "RFE cardinality",
        pass,
        &format!("({} of 25 selected, identical across runs: {same}, {:?})", pa.selected_features.len(), pa.selected_features),
    );
    assert!(pass);
}

struct Oracle {
    cm: Vec<Vec<u64>>,
    precision: Vec<f64>,
    recall: Vec<f64>,
    f1: Vec<f64>,
    macro_: [f64; 3],
    weighted: [f64; 3],
    accuracy: f64,
    kappa: f64,
    auc: Option<f64>,
}

/// Straight from the definitions, one sample at a time.
fn oracle(c: usize, t: &[usize], p: &[usize], proba: &[Vec<f64>]) -> Oracle {
    let n = t.len();
    let mut cm = vec![vec![0u64; c]; c];
    for i in 0..n {
        cm[t[i]][p[i]] += 1;
    }
    let count = |f: &dyn Fn(usize) -> bool| (0..n).filter(|&i| f(i)).count() as f64;
    let (mut precision, mut recall, mut f1, mut support) = (vec![], vec![], vec![], vec![]);
    for k in 0..c {
        let tp = count(&|i| t[i] == k && p[i] == k);
        let predicted = count(&|i| p[i] == k);
        let actual = count(&|i| t[i] == k);
        let pr = if predicted > 0.0 { tp / predicted } else { 0.0 };
        let rc = if actual > 0.0 { tp / actual } else { 0.0 };
        precision.push(pr);
        recall.push(rc);
        f1.push(if pr + rc > 0.0 { 2.0 * pr * rc / (pr + rc) } else { 0.0 });
        support.push(actual);
    }
    let present: Vec<usize> = (0..c).filter(|&k| support[k] > 0.0).collect();
    let mean = |v: &[f64]| present.iter().map(|&k| v[k]).sum::<f64>() / present.len() as f64;
    let wmean = |v: &[f64]| (0..c).map(|k| v[k] * support[k]).sum::<f64>() / n as f64;
    let accuracy = count(&|i| t[i] == p[i]) / n as f64;
    let pe: f64 = (0..c).map(|k| count(&|i| t[i] == k) * count(&|i| p[i] == k)).sum::<f64>() / (n * n) as f64;
    let kappa = if pe >= 1.0 { 1.0 } else { (accuracy - pe) / (1.0 - pe) };

    let mut aucs = vec![];
    for k in 0..c {
        let pos: Vec<f64> = (0..n).filter(|&i| t[i] == k).map(|i| proba[i][k]).collect();
        let neg: Vec<f64> = (0..n).filter(|&i| t[i] != k).map(|i| proba[i][k]).collect();
        if pos.is_empty() || neg.is_empty() {
            continue;
        }
        let mut wins = 0.0;
        for a in &pos {
            for b in &neg {
                wins += if a > b { 1.0 } else if a == b { 0.5 } else { 0.0 };
            }
        }
        aucs.push(wins / (pos.len() * neg.len()) as f64);
    }
    let auc = (!aucs.is_empty()).then(|| aucs.iter().sum::<f64>() / aucs.len() as f64);
    Oracle {
        cm,
        macro_: [mean(&precision), mean(&recall), mean(&f1)],
        weighted: [wmean(&precision), wmean(&recall), wmean(&f1)],
        precision,
        recall,
        f1,
        accuracy,
        kappa,
        auc,
    }
}

#[test]
fn criterion_4_metric_oracles() {
    let _g = serial();
    let mut r = rng_for(4, &[]);
    let mut worst: f64 = 0.0;
    let mut mismatched = 0;
    for _ in 0..1000 {
        let c = r.random_range(2..=6);
        let n = r.random_range(1..=200);
        // Skewed labels so absent and never-predicted classes occur.
        let t: Vec<usize> = (0..n).map(|_| r.random_range(0..c).min(r.random_range(0..c))).collect();
        let p: Vec<usize> = (0..n).map(|i| if r.random_bool(0.6) { t[i] } else { r.random_range(0..c) }).collect();
        let coarse = r.random_bool(0.5);
        let proba: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                // Coarse weights force score ties.
                let w: Vec<f64> =
                    (0..c).map(|_| if coarse { r.random_range(0..4) as f64 + 1.0 } else { r.random_range(0.01..1.0) }).collect();
                let s: f64 = w.iter().sum();
                w.iter().map(|v| v / s).collect()
            })
            .collect();
        let o = oracle(c, &t, &p, &proba);

        let cm = confusion_matrix(&t, &p, c).unwrap();
        let rep = classification_report(&cm).unwrap();
        let kappa = cohen_kappa(&cm).unwrap();
        let auc = roc_auc_ovr_macro(&t, &Matrix::from_rows(&proba).unwrap()).ok().map(|a| a.macro_auc);
        let cm_ok = (0..c).all(|i| (0..c).all(|j| cm.get(i, j) == o.cm[i][j]));
        let mut diffs = vec![
            rep.accuracy - o.accuracy,
            rep.macro_precision - o.macro_[0],
            rep.macro_recall - o.macro_[1],
            rep.macro_f1 - o.macro_[2],
            rep.weighted_precision - o.weighted[0],
            rep.weighted_recall - o.weighted[1],
            rep.weighted_f1 - o.weighted[2],
            kappa - o.kappa,
        ];
        for k in 0..c {
            diffs.push(rep.per_class[k].precision - o.precision[k]);
            diffs.push(rep.per_class[k].recall - o.recall[k]);
            diffs.push(rep.per_class[k].f1 - o.f1[k]);
        }
        match (auc, o.auc) {
            (Some(a), Some(b)) => diffs.push(a - b),
            (None, None) => {}
            _ => mismatched += 1,
        }
        let d = diffs.iter().map(|v| v.abs()).fold(0.0, f64::max);
        worst = worst.max(d);
        if !cm_ok || d > 1e-9 {
            mismatched += 1;
        }
    }
    let hand = ConfusionMatrix::from_counts(2, vec![20, 5, 10, 15]).unwrap();
    let k = cohen_kappa(&hand).unwrap();
    let hand_rep = classification_report(&hand).unwrap();
    let hand_ok = (k - 0.4).abs() < 1e-9
        && (hand_rep.accuracy - 0.7).abs() < 1e-12
        && (hand_rep.per_class[0].precision - 2.0 / 3.0).abs() < 1e-12
        && (hand_rep.per_class[1].recall - 0.6).abs() < 1e-12;
    let pass = mismatched == 0 && hand_ok;
    verdict(
        4,
        "metric oracle equivalence",
        pass,
        &format!("(1000 instances, {mismatched} mismatches, worst |diff| {worst:.1e}, kappa [[20,5],[10,15]] = {k})"),
    );
    assert!(pass);
}

#[test]
fn criterion_5_desk_scale_sanity() {
    let _g = serial();
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = desk_blobs(dir.path());
    cfg.models = vec![ModelFamily::Rf];
    let started = Instant::now();
    let report = run_pipeline(&cfg).unwrap();
    let secs = started.elapsed().as_secs_f64();
    let rf = report.model("rf").unwrap();
    let pass = rf.test.accuracy >= 0.95 && rf.test.kappa >= 0.90 && secs < 120.0;
    verdict(
        5,
        "model sanity at desk scale",
        pass,
        &format!(
            "(RF test accuracy {:.4}, kappa {:.4}, AUC {:.4}, pipeline {secs:.1} s, RF fit {:.1} s, test classes {:?})",
            rf.test.accuracy, rf.test.kappa, rf.test.auc_ovr_macro, rf.training_time_s, report.preprocessing.test_histogram
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_6_mlp_gradient() {
    let _g = serial();
    let mut r = rng_for(6, &[]);
    let (d, h, c) = (8, 16, 4);
    let rows: Vec<f64> = (0..20 * d).map(|_| StandardNormal.sample(&mut r)).collect();
    let x = Matrix::new(20, d, rows).unwrap();
    let y: Vec<usize> = (0..20).map(|i| i % c).collect();
    let batch: Vec<usize> = (0..20).collect();
    let net = MlpNetwork::init(d, h, c, &mut rng_for(6, &[1]));
    let mut grad = vec![0.0; net.params().len()];
    net.loss_and_gradient(&x, &y, &batch, Some(&mut grad));
    let step = 1e-5;
    let (mut diff2, mut na, mut nn) = (0.0, 0.0, 0.0);
    for k in 0..grad.len() {
        let mut plus = net.clone();
        plus.params_mut()[k] += step;
        let mut minus = net.clone();
        minus.params_mut()[k] -= step;
        let fd = (plus.loss_and_gradient(&x, &y, &batch, None) - minus.loss_and_gradient(&x, &y, &batch, None)) / (2.0 * step);
        diff2 += (fd - grad[k]).powi(2);
        na += grad[k].powi(2);
        nn += fd.powi(2);
    }
    let rel = diff2.sqrt() / (na.sqrt() + nn.sqrt());
    let pass = rel < 1e-4;
    verdict(6, "MLP gradient check", pass, &format!("(relative error {rel:.2e} over {} parameters)", grad.len()));
    assert!(pass);
}

fn timing_free_json(dir: &Path) -> String {
    let r: hybrid_ids::EvaluationReport = hybrid_ids::io::read_json(&dir.join(REPORT_FILE)).unwrap();
    serde_json::to_string_pretty(&r.without_timing()).unwrap()
}

#[test]
fn criterion_7_determinism() {
    let _g = serial();
    let dir = tempfile::tempdir().unwrap();
    let data = common::small_blob_csv(dir.path());
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let ra = run_pipeline(&common::small_config(&data, &a)).unwrap();
    let mut cfg_b = common::small_config(&data, &b);
    cfg_b.output_dir = b.clone();
    let rb = run_pipeline(&cfg_b).unwrap();
    let mut ja = timing_free_json(&a);
    let jb = timing_free_json(&b);
    // The echoed output directory is the only intended difference.
    ja = ja.replace(a.to_str().unwrap(), b.to_str().unwrap());
    let reports_equal = ja == jb;
    let mut models_equal = true;
    for m in &ra.models {
        models_equal &= std::fs::read(a.join(&m.model_file)).unwrap() == std::fs::read(b.join(&m.model_file)).unwrap();
    }
    let tables_equal = ["test_split.csv", "preprocess.json", "cm_rf.csv", "curve_mlp.csv"]
        .iter()
        .all(|f| std::fs::read(a.join(f)).unwrap() == std::fs::read(b.join(f)).unwrap());
    let pass = reports_equal && models_equal && tables_equal && ra.models.len() == rb.models.len();
    verdict(
        7,
        "determinism",
        pass,
        &format!("(report identical: {reports_equal}, {} model files identical: {models_equal}, tables identical: {tables_equal})", ra.models.len()),
    );
    assert!(pass);
}

#[test]
fn criterion_8_full_dataset_reproduction() {
    let _g = serial();
    let name = "full dataset reproduction";
    let Some(path) = rt_iot_path() else {
        return not_run(8, name, "(RT-IoT2022 CSV not available; set HYBRID_IDS_RT_IOT2022)");
    };
    let dir = tempfile::tempdir().unwrap();
    let cfg = rt_iot_config(&path, dir.path());
    let started = Instant::now();
    let report = run_pipeline(&cfg).unwrap();
    let secs = started.elapsed().as_secs_f64();
    let rf = report.model("rf").unwrap();
    for m in &report.models {
        println!(
            "  {:<7} acc {:.4} kappa {:.4} auc {:.4} MP {:.4} WP {:.4} MR {:.4} WR {:.4} MF1 {:.4} WF1 {:.4} cv {:.4} fit {:.1} s",
            m.name,
            m.test.accuracy,
            m.test.kappa,
            m.test.auc_ovr_macro,
            m.test.macro_precision,
            m.test.weighted_precision,
            m.test.macro_recall,
            m.test.weighted_recall,
            m.test.macro_f1,
            m.test.weighted_f1,
            m.cv_score,
            m.training_time_s
        );
    }
    let pass = rf.test.accuracy >= 0.98 && rf.test.kappa >= 0.97 && rf.test.auc_ovr_macro >= 0.99 && secs < 900.0;
    verdict(
        8,
        name,
        pass,
        &format!(
            "(RF accuracy {:.4}, kappa {:.4}, AUC {:.4}, runtime {secs:.0} s, outliers removed {:?})",
            rf.test.accuracy, rf.test.kappa, rf.test.auc_ovr_macro, report.preprocessing.outliers.removed_per_class
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_9_audit_closure() {
    let _g = serial();
    let dir = tempfile::tempdir().unwrap();
    let data = common::small_blob_csv(dir.path());
    let out = dir.path().join("out");
    let report = run_pipeline(&common::small_config(&data, &out)).unwrap();
    let outcome = audit(&out).unwrap();
    let models: std::collections::BTreeSet<&str> = outcome.checks.iter().map(|c| c.model.as_str()).collect();
    let worst = outcome
        .checks
        .iter()
        .filter(|c| c.reported.is_finite())
        .map(|c| (c.reported - c.recomputed).abs())
        .fold(0.0, f64::max);
    let pass = outcome.failures == 0 && models.len() == report.models.len();
    verdict(
        9,
        "audit closure",
        pass,
        &format!("({} checks over {} models, {} mismatches, worst |diff| {worst:.1e})", outcome.checks.len(), models.len(), outcome.failures),
    );
    assert!(pass);
}
