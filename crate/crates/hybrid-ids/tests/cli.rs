mod common;

use std::path::Path;
use std::process::{Command, Output};

use hybrid_ids::pipeline::{EvaluationReport, REPORT_FILE};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hybrid-ids"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn write_small_config(dir: &Path) -> std::path::PathBuf {
    let data = common::small_blob_csv(dir);
    let mut cfg = common::small_config(&data, &dir.join("out"));
    cfg.models = vec![hybrid_ids::ModelFamily::Rf, hybrid_ids::ModelFamily::Knn];
    let p = dir.join("config.json");
    std::fs::write(&p, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    p
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(code(&run(&["frobnicate"])), 1);
    assert_eq!(code(&run(&["pipeline", "--no-such-flag"])), 1);
    assert_eq!(code(&run(&["pipeline", "--models", "svc"])), 1);
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn missing_data_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["pipeline", "--data", dir.path().join("absent.csv").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("load"));
}

#[test]
fn pipeline_audit_and_predict_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_small_config(dir.path());
    let out = dir.path().join("run");
    let o = run(&["pipeline", "--config", cfg.to_str().unwrap(), "--output-dir", out.to_str().unwrap(), "--seed", "7"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: EvaluationReport = hybrid_ids::io::read_json(&out.join(REPORT_FILE)).unwrap();
    assert_eq!(report.config.seed, 7);
    assert_eq!(report.models.len(), 2);

    let o = run(&["audit", "--dir", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("0 mismatches"));

    // Scoring the persisted test split reproduces the reported accuracy.
    let preds = dir.path().join("preds.csv");
    let model = out.join("model_rf.json");
    let o = run(&[
        "predict",
        "--model",
        model.to_str().unwrap(),
        "--input",
        out.join("test_split.csv").to_str().unwrap(),
        "--output",
        preds.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let test = hybrid_ids::io::read_split_csv(&out.join("test_split.csv"), &report.preprocessing.class_names).unwrap();
    let table = hybrid_ids::io::load_table(&preds).unwrap();
    assert_eq!(table.n_rows(), test.n_rows());
    let correct = table
        .rows()
        .iter()
        .zip(test.y())
        .filter(|(r, &y)| r[1] == report.preprocessing.class_names[y])
        .count();
    let acc = correct as f64 / test.n_rows() as f64;
    assert!((acc - report.model("rf").unwrap().test.accuracy).abs() < 1e-12);

    // Raw rows go through the saved preprocessing.
    let raw_preds = dir.path().join("raw_preds.csv");
    let o = run(&[
        "predict",
        "--model",
        model.to_str().unwrap(),
        "--input",
        dir.path().join("small.csv").to_str().unwrap(),
        "--preprocess",
        out.join("preprocess.json").to_str().unwrap(),
        "--output",
        raw_preds.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(hybrid_ids::io::load_table(&raw_preds).unwrap().n_rows(), 220);

    // Raw rows without preprocessing lack the expected columns in usable form.
    let o = run(&[
        "predict",
        "--model",
        model.to_str().unwrap(),
        "--input",
        dir.path().join("config.json").to_str().unwrap(),
        "--output",
        raw_preds.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 2);

    std::fs::write(&model, &std::fs::read(&model).unwrap()[..100]).unwrap();
    let o = run(&["audit", "--dir", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("checksum"));
}

#[test]
fn tampered_report_fails_audit_with_numeric_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_small_config(dir.path());
    let out = dir.path().join("run");
    assert_eq!(code(&run(&["pipeline", "--config", cfg.to_str().unwrap(), "--output-dir", out.to_str().unwrap()])), 0);
    let mut report: EvaluationReport = hybrid_ids::io::read_json(&out.join(REPORT_FILE)).unwrap();
    report.models[0].test.accuracy -= 0.01;
    hybrid_ids::io::write_json(&out.join(REPORT_FILE), &report).unwrap();
    let o = run(&["audit", "--dir", out.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("MISMATCH rf accuracy"));
}

#[test]
fn learning_curve_and_ingest_check() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_small_config(dir.path());
    let curve = dir.path().join("curves").join("knn.csv");
    let o = run(&[
        "learning-curve",
        "--config",
        cfg.to_str().unwrap(),
        "--model",
        "knn",
        "--curve-fractions",
        "0.25,0.5,1.0",
        "--out",
        curve.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(hybrid_ids::io::load_table(&curve).unwrap().n_rows(), 3);

    let o = run(&["ingest-check", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let summary: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(summary["rows"], 220);
    assert_eq!(summary["class_counts"]["class_2"], 40);
    assert_eq!(summary["matches_reference"], false);
    assert_eq!(code(&run(&["ingest-check", "--config", cfg.to_str().unwrap(), "--expect-reference"])), 2);
}

#[test]
fn data_dir_variable_resolves_relative_paths() {
    let dir = tempfile::tempdir().unwrap();
    common::small_blob_csv(dir.path());
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"data_path": "small.csv", "target_column": "label", "categorical_columns": ["proto"]}"#).unwrap();
    let o = bin().args(["ingest-check", "--config", cfg.to_str().unwrap()]).env(hybrid_ids::config::DATA_DIR_ENV, dir.path()).output().unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}
