//! Schema and class-distribution sanity check of a raw dataset.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use hybrid_ids_core::dataset::encode;
use serde::Serialize;

use crate::config::PipelineConfig;
use crate::error::Result;
use crate::io;

/// Per-class counts published for RT-IoT2022; label spellings differ between
/// releases, so the check compares the multiset of counts.
pub const RT_IOT2022_CLASS_COUNTS: [usize; 12] = [94_659, 8_108, 7_750, 4_146, 2_590, 2_010, 2_000, 1_002, 534, 253, 37, 28];
pub const RT_IOT2022_ROWS: usize = 123_117;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IngestSummary {
    pub path: String,
    pub rows: usize,
    pub columns: usize,
    pub features: usize,
    pub class_counts: BTreeMap<String, usize>,
    /// Row total and per-class counts equal the published distribution.
    pub matches_reference: bool,
    pub elapsed_s: f64,
}

pub fn matches_reference(rows: usize, counts: &[usize]) -> bool {
    let mut got = counts.to_vec();
    got.sort_unstable_by(|a, b| b.cmp(a));
    rows == RT_IOT2022_ROWS && got == RT_IOT2022_CLASS_COUNTS
}

pub fn ingest_check(cfg: &PipelineConfig, path: &Path) -> Result<IngestSummary> {
    let started = Instant::now();
    let mut table = io::load_dataset(path, &cfg.target_column, &cfg.categorical_columns)?;
    let columns = table.header().len();
    table.drop_columns(&cfg.drop_columns)?;
    let (ds, _) = encode(&table, &cfg.target_column, &cfg.categorical_columns)?;
    let counts = ds.class_counts();
    Ok(IngestSummary {
        path: path.display().to_string(),
        rows: ds.n_rows(),
        columns,
        features: ds.n_features(),
        class_counts: ds.class_names().iter().cloned().zip(counts.iter().copied()).collect(),
        matches_reference: matches_reference(ds.n_rows(), &counts),
        elapsed_s: started.elapsed().as_secs_f64(),
    })
}
