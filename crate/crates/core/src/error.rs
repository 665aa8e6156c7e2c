use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("table is empty")]
    EmptyTable,
    #[error("column `{0}` not found in header")]
    MissingColumn(String),
    #[error("duplicate column `{0}` in header")]
    DuplicateColumn(String),
    #[error("row {row} has {found} cells, expected {expected}")]
    RaggedRow { row: usize, found: usize, expected: usize },
    #[error("column `{0}` has no values")]
    EmptyColumn(String),
    #[error("row {row}, column `{column}`: cannot parse `{value}` as a finite number")]
    UnparseableCell { row: usize, column: String, value: String },
    #[error("column `{column}`: unknown category `{value}`")]
    UnknownCategory { column: String, value: String },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("label {label} out of range for {n_classes} classes")]
    LabelOutOfRange { label: usize, n_classes: usize },
    #[error("non-finite value at row {row}, column {column}")]
    NonFinite { row: usize, column: usize },
    #[error("z-score threshold {threshold} removed every row")]
    AllRowsRemoved { threshold: f64 },
    #[error("class {class} has {available} rows, {requested} requested")]
    NotEnoughRows { class: usize, available: usize, requested: usize },
    #[error("oversampling target {target} is below the {available} rows of class {class}")]
    TargetBelowCount { class: usize, available: usize, target: usize },
    #[error("{model} diverged (non-finite loss) at iteration {iteration}")]
    Divergence { model: &'static str, iteration: usize },
    #[error("feature mismatch: model expects {expected:?}, input has {found:?}")]
    FeatureMismatch { expected: alloc::vec::Vec<String>, found: alloc::vec::Vec<String> },
    #[error("no class has both positive and negative instances")]
    NoEligibleClass,
}

impl Error {
    /// Numeric failures (divergence, non-finite data) as opposed to bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::Divergence { .. } | Error::NonFinite { .. })
    }
}
