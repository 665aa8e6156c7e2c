//! File formats, the evaluation pipeline and the command-line front end
//! around [`hybrid_ids_core`].

pub mod audit;
pub mod config;
pub mod error;
pub mod ingest;
pub mod io;
pub mod persist;
pub mod pipeline;
pub mod predict;

pub use config::{Mode, ModelFamily, PipelineConfig};
pub use error::{Error, Result};
pub use pipeline::{run_pipeline, EvaluationReport};
