//! Batch scoring of a CSV file with a saved model.

use std::path::Path;

use hybrid_ids_core::models::{argmax, TrainedModel};
use hybrid_ids_core::{Matrix, RawTable};

use crate::error::{Error, Result};
use crate::io;
use crate::pipeline::PreprocessArtifact;

/// Raw rows go through `preprocess` when given; otherwise the table must
/// already hold the model's (standardized, selected) feature columns by name.
pub fn features_for(model: &TrainedModel, table: &RawTable, preprocess: Option<&PreprocessArtifact>) -> Result<Matrix> {
    if let Some(p) = preprocess {
        model.check_features(&p.selected_features)?;
        return p.transform(table);
    }
    let cols: Vec<usize> = model.expected_features.iter().map(|n| table.column_index(n)).collect::<std::result::Result<_, _>>()?;
    let mut data = Vec::with_capacity(table.n_rows() * cols.len());
    for (i, r) in table.rows().iter().enumerate() {
        for &j in &cols {
            let v: f64 = r[j].trim().parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| {
                hybrid_ids_core::Error::UnparseableCell { row: i + 1, column: table.header()[j].clone(), value: r[j].clone() }
            })?;
            data.push(v);
        }
    }
    Ok(Matrix::new(table.n_rows(), cols.len(), data)?)
}

/// Writes `row,predicted,p_<class>...` for every input row.
pub fn predict_csv(model: &TrainedModel, input: &Path, preprocess: Option<&PreprocessArtifact>, output: &Path) -> Result<usize> {
    let table = io::load_table(input)?;
    let x = features_for(model, &table, preprocess)?;
    let proba = model.predict_proba(&x)?;
    let file = std::fs::File::create(output).map_err(|e| Error::io(output, e))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    let csv_err = |source| Error::Csv { path: output.to_path_buf(), source };
    let mut head = vec!["row".to_string(), "predicted".to_string()];
    head.extend(model.class_names.iter().map(|c| format!("p_{c}")));
    w.write_record(&head).map_err(csv_err)?;
    for (i, p) in proba.iter_rows().enumerate() {
        let mut rec = vec![(i + 1).to_string(), model.class_names[argmax(p)].clone()];
        rec.extend(p.iter().map(f64::to_string));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(output, e))?;
    Ok(proba.rows())
}
