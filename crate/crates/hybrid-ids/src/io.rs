//! CSV ingestion and the CSV artifacts written by the pipeline.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use hybrid_ids_core::metrics::ConfusionMatrix;
use hybrid_ids_core::models::LearningCurvePoint;
use hybrid_ids_core::{Dataset, Matrix, RawTable};

use crate::error::{Error, Result};

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> Error + '_ {
    move |source| Error::Csv { path: path.to_path_buf(), source }
}

/// Reads a comma-separated UTF-8 file with a header row. The target and
/// categorical columns must appear in the header.
pub fn load_dataset(path: &Path, target_column: &str, categorical_columns: &[String]) -> Result<RawTable> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(file);
    let header: Vec<String> = reader.headers().map_err(csv_err(path))?.iter().map(str::to_string).collect();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(hybrid_ids_core::Error::EmptyTable.into());
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err(path))?;
        if record.len() != header.len() {
            return Err(hybrid_ids_core::Error::RaggedRow { row: i + 1, found: record.len(), expected: header.len() }.into());
        }
        rows.push(record.iter().map(str::to_string).collect());
    }
    if rows.is_empty() {
        return Err(hybrid_ids_core::Error::EmptyTable.into());
    }
    let table = RawTable::new(header, rows)?;
    table.column_index(target_column)?;
    for c in categorical_columns {
        table.column_index(c)?;
    }
    Ok(table)
}

/// Reads a headed CSV without schema expectations.
pub fn load_table(path: &Path) -> Result<RawTable> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(file);
    let header: Vec<String> = reader.headers().map_err(csv_err(path))?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        rows.push(record.map_err(csv_err(path))?.iter().map(str::to_string).collect());
    }
    Ok(RawTable::new(header, rows)?)
}

fn writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(BufWriter::new(file)))
}

/// Header row and first column carry class names; rows are true classes.
pub fn write_confusion_csv(path: &Path, cm: &ConfusionMatrix, class_names: &[String]) -> Result<()> {
    let mut w = writer(path)?;
    let mut head = vec!["true\\predicted".to_string()];
    head.extend(class_names.iter().cloned());
    w.write_record(&head).map_err(csv_err(path))?;
    for (c, name) in class_names.iter().enumerate() {
        let mut rec = vec![name.clone()];
        rec.extend(cm.row(c).iter().map(u64::to_string));
        w.write_record(&rec).map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_confusion_csv(path: &Path) -> Result<ConfusionMatrix> {
    let t = load_table(path)?;
    let c = t.n_rows();
    let mut counts = Vec::with_capacity(c * c);
    for (i, r) in t.rows().iter().enumerate() {
        for cell in &r[1..] {
            counts.push(cell.parse::<u64>().map_err(|_| hybrid_ids_core::Error::UnparseableCell {
                row: i + 1,
                column: "count".into(),
                value: cell.clone(),
            })?);
        }
    }
    Ok(ConfusionMatrix::from_counts(c, counts)?)
}

pub fn write_curve_csv(path: &Path, points: &[LearningCurvePoint]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["fraction", "n_rows", "train_accuracy", "cv_accuracy"]).map_err(csv_err(path))?;
    for p in points {
        w.write_record([p.fraction.to_string(), p.n_rows.to_string(), p.train_accuracy.to_string(), p.cv_accuracy.to_string()])
            .map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// One-vs-rest ROC points per class for external plotting.
pub fn write_roc_csv(path: &Path, y_true: &[usize], proba: &Matrix, class_names: &[String]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["class", "fpr", "tpr"]).map_err(csv_err(path))?;
    for (c, name) in class_names.iter().enumerate() {
        let pos: Vec<bool> = y_true.iter().map(|&l| l == c).collect();
        if !pos.iter().any(|&p| p) || pos.iter().all(|&p| p) {
            continue;
        }
        for (fpr, tpr) in hybrid_ids_core::metrics::roc_curve(&proba.column(c), &pos) {
            w.write_record([name.clone(), fpr.to_string(), tpr.to_string()]).map_err(csv_err(path))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub const LABEL_COLUMN: &str = "label";

/// Features (shortest round-trip decimal) followed by the class index.
pub fn write_split_csv(path: &Path, ds: &Dataset) -> Result<()> {
    let mut w = writer(path)?;
    let mut head: Vec<String> = ds.feature_names().to_vec();
    head.push(LABEL_COLUMN.to_string());
    w.write_record(&head).map_err(csv_err(path))?;
    let mut rec = Vec::with_capacity(head.len());
    for (i, row) in ds.x().iter_rows().enumerate() {
        rec.clear();
        rec.extend(row.iter().map(f64::to_string));
        rec.push(ds.y()[i].to_string());
        w.write_record(&rec).map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_split_csv(path: &Path, class_names: &[String]) -> Result<Dataset> {
    let t = load_table(path)?;
    let label = t.column_index(LABEL_COLUMN)?;
    let features: Vec<String> = t.header().iter().filter(|h| h.as_str() != LABEL_COLUMN).cloned().collect();
    let mut data = Vec::with_capacity(t.n_rows() * features.len());
    let mut y = Vec::with_capacity(t.n_rows());
    for (i, r) in t.rows().iter().enumerate() {
        for (j, cell) in r.iter().enumerate() {
            let bad = || hybrid_ids_core::Error::UnparseableCell { row: i + 1, column: t.header()[j].clone(), value: cell.clone() };
            if j == label {
                y.push(cell.parse::<usize>().map_err(|_| bad())?);
            } else {
                data.push(cell.parse::<f64>().map_err(|_| bad())?);
            }
        }
    }
    let x = Matrix::new(t.n_rows(), features.len(), data)?;
    Ok(Dataset::new(x, y, features, class_names.to_vec())?)
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::json(path, e))?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}
