use thiserror::Error;

/// Errors surfaced by the selection pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing label column (expected a header named \"label\")")]
    MissingLabelColumn,
    #[error("ragged row {row}: expected {expected} cells, found {found}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("non-numeric cell at row {row}, column {column} ({name}): {value:?}")]
    NonNumeric {
        row: usize,
        column: usize,
        name: String,
        value: String,
    },
    #[error("non-finite value at row {row}, column {column}")]
    NonFinite { row: usize, column: usize },
    #[error("fewer than 2 classes (found {found})")]
    TooFewClasses { found: usize },
    #[error("duplicate feature name {0:?}")]
    DuplicateFeatureName(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("empty feature mask")]
    EmptyMask,
    #[error("unknown class {0}")]
    UnknownClass(i64),
    #[error("no outside-class samples for class {0}")]
    NoOutsideClassSamples(i64),
    #[error("cannot split with every class in both parts after {attempts} attempts")]
    SplitInfeasible { attempts: usize },
    #[error("feature count {n} exceeds max_n {max_n}")]
    ExceedsMaxN { n: usize, max_n: usize },
    #[error("both classes must be present")]
    MissingClass,
    #[error("empty training set")]
    EmptyTrain,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid mask: {0}")]
    InvalidMask(String),
}

pub type Result<T> = std::result::Result<T, Error>;
