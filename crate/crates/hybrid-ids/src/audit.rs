//! Re-derives the reported test metrics from persisted artifacts.

use std::path::Path;

use hybrid_ids_core::metrics::MetricReport;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::io;
use crate::persist;
use crate::pipeline::{evaluate, EvaluationReport, REPORT_FILE};

pub const AUDIT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditCheck {
    pub model: String,
    pub field: String,
    pub reported: f64,
    pub recomputed: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditOutcome {
    pub checks: Vec<AuditCheck>,
    pub failures: usize,
}

fn scalar_fields(m: &MetricReport) -> Vec<(String, f64)> {
    let mut v = vec![
        ("accuracy".to_string(), m.accuracy),
        ("macro_precision".to_string(), m.macro_precision),
        ("weighted_precision".to_string(), m.weighted_precision),
        ("macro_recall".to_string(), m.macro_recall),
        ("weighted_recall".to_string(), m.weighted_recall),
        ("macro_f1".to_string(), m.macro_f1),
        ("weighted_f1".to_string(), m.weighted_f1),
        ("kappa".to_string(), m.kappa),
        ("auc_ovr_macro".to_string(), m.auc_ovr_macro),
    ];
    for (c, pc) in m.per_class.iter().enumerate() {
        v.push((format!("class{c}.precision"), pc.precision));
        v.push((format!("class{c}.recall"), pc.recall));
        v.push((format!("class{c}.f1"), pc.f1));
        v.push((format!("class{c}.support"), pc.support as f64));
    }
    for (c, auc) in m.per_class_auc.iter().enumerate() {
        v.push((format!("class{c}.auc"), auc.unwrap_or(f64::NAN)));
    }
    v
}

fn close(a: f64, b: f64) -> bool {
    (a.is_nan() && b.is_nan()) || (a - b).abs() <= AUDIT_TOLERANCE
}

/// Loads `report.json`, the test split and every model file from `dir`,
/// recomputes each model's test metrics and compares them with the report.
pub fn audit(dir: &Path) -> Result<AuditOutcome> {
    let report: EvaluationReport = io::read_json(&dir.join(REPORT_FILE))?;
    let test = io::read_split_csv(&dir.join(&report.test_split_file), &report.preprocessing.class_names)?;
    let mut checks = Vec::new();
    for rec in &report.models {
        let model = persist::load_model(&dir.join(&rec.model_file))?;
        model.check_features(test.feature_names())?;
        let (metrics, cm) = evaluate(&model, &test)?;
        let reported = scalar_fields(&rec.test);
        let recomputed = scalar_fields(&metrics);
        if reported.len() != recomputed.len() {
            return Err(Error::AuditMismatch(1));
        }
        for ((field, a), (_, b)) in reported.into_iter().zip(recomputed) {
            checks.push(AuditCheck { model: rec.name.clone(), ok: close(a, b), field, reported: a, recomputed: b });
        }
        let file_cm = io::read_confusion_csv(&dir.join(&rec.confusion_matrix_file))?;
        for t in 0..cm.n_classes() {
            for p in 0..cm.n_classes() {
                let (a, b, f) = (rec.confusion_matrix[t][p], cm.get(t, p), file_cm.get(t, p));
                checks.push(AuditCheck {
                    model: rec.name.clone(),
                    field: format!("cm[{t}][{p}]"),
                    reported: a as f64,
                    recomputed: b as f64,
                    ok: a == b && f == b,
                });
            }
        }
    }
    let failures = checks.iter().filter(|c| !c.ok).count();
    Ok(AuditOutcome { checks, failures })
}
