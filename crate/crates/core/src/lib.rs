//! Learning core for imbalanced IoT intrusion detection.
//!
//! Everything here is pure computation over in-memory tables: label
//! encoding and stratified splitting, z-score outlier filtering and
//! standardization, recursive feature elimination, hybrid
//! (undersample + SMOTE) rebalancing, from-scratch classifiers with
//! cross-validation and grid search, and the evaluation metrics.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, timing and
//! the command line live in the `hybrid-ids` companion crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod dataset;
pub mod error;
pub mod feature_select;
pub mod matrix;
pub mod metrics;
pub mod models;
pub mod preprocess;
pub mod rng;
pub mod sampling;

pub use dataset::{Dataset, FeatureEncoding, LabelEncoder, RawTable, SplitPair};
pub use error::{Error, Result};
pub use matrix::Matrix;
