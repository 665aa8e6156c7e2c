#![allow(dead_code)]

use std::io::Write;
use std::path::{Path, PathBuf};

use hybrid_ids::config::{ModelFamily, PipelineConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub const BLOB_COUNTS: [usize; 5] = [5000, 800, 100, 30, 10];

/// Informative axes shifted per class. The largest minority class moves on
/// every axis, which widens each axis's pooled spread, so the smaller classes
/// (each shifted on a distinct subset) stay inside the z-score band while
/// sitting at least `shift` away from every other centre.
const BLOB_AXES: [&[usize]; 5] = [&[], &[0, 1, 2, 3, 4], &[0, 1], &[2, 3], &[4]];

pub fn blob_centre(class: usize, informative: usize, shift: f64) -> Vec<f64> {
    let mut c = vec![0.0; informative];
    for &j in BLOB_AXES[class % BLOB_AXES.len()] {
        c[j % informative] = shift;
    }
    c
}

/// Writes a blob CSV with string labels and `noise_dims` pure-noise columns
/// after the informative ones, plus a random categorical `proto` column when
/// `with_proto` is set.
pub fn write_blob_csv(path: &Path, counts: &[usize], informative: usize, noise_dims: usize, shift: f64, seed: u64, with_proto: bool) {
    let mut r = rng(seed);
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).unwrap());
    let mut head: Vec<String> = (0..informative + noise_dims).map(|j| format!("f{j:02}")).collect();
    if with_proto {
        head.push("proto".into());
    }
    head.push("label".into());
    writeln!(f, "{}", head.join(",")).unwrap();
    for (c, &n) in counts.iter().enumerate() {
        let centre = blob_centre(c, informative, shift);
        for _ in 0..n {
            let mut cells: Vec<String> = Vec::with_capacity(head.len());
            for j in 0..informative + noise_dims {
                let z: f64 = StandardNormal.sample(&mut r);
                let mu = if j < informative { centre[j] } else { 0.0 };
                cells.push((mu + z).to_string());
            }
            if with_proto {
                cells.push(["tcp", "udp", "icmp"][r.random_range(0..3)].to_string());
            }
            cells.push(format!("class_{c}"));
            writeln!(f, "{}", cells.join(",")).unwrap();
        }
    }
}

/// A config that reads `data` with the blob schema and writes into `out`.
pub fn blob_config(data: &Path, out: &Path) -> PipelineConfig {
    PipelineConfig {
        data_path: data.to_path_buf(),
        target_column: "label".into(),
        categorical_columns: vec!["proto".into()],
        output_dir: out.to_path_buf(),
        ..PipelineConfig::default()
    }
}

/// Small and quick: every family, tiny grids, few curve points.
pub fn small_config(data: &Path, out: &Path) -> PipelineConfig {
    use hybrid_ids_core::models::{ModelSpec, RfHyperParams};
    let mut cfg = blob_config(data, out);
    cfg.rfe_k = 5;
    cfg.resample_target = 60;
    cfg.cv_folds = 3;
    cfg.curve_fractions = vec![0.5, 1.0];
    cfg.grids.rf = vec![ModelSpec::RandomForest(RfHyperParams { n_estimators: 10, ..RfHyperParams::default() })];
    cfg.grids.knn = vec![ModelSpec::Knn { k: 3 }, ModelSpec::Knn { k: 5 }];
    cfg.grids.lr = vec![ModelSpec::LogReg { l2: 1e-3, lr: 0.5, max_iter: 100, tol: 1e-6 }];
    cfg.grids.mlp =
        vec![ModelSpec::Mlp { hidden: 8, lr: 0.05, momentum: 0.9, batch: 32, max_epochs: 20, patience: 5 }];
    cfg.models = vec![ModelFamily::Rf, ModelFamily::Knn, ModelFamily::Lr, ModelFamily::Mlp, ModelFamily::Voting];
    cfg
}

pub fn small_blob_csv(dir: &Path) -> PathBuf {
    let p = dir.join("small.csv");
    write_blob_csv(&p, &[120, 60, 40], 4, 4, 4.0, 11, true);
    p
}
