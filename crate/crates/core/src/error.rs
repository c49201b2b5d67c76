use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("invalid schema: {0}")]
    Schema(String),

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("row {row}, column `{column}`: cannot parse `{value}` as a number")]
    ParseNumeric {
        row: usize,
        column: String,
        value: String,
    },

    #[error("row {row}, column `{column}`: unknown level `{value}`")]
    UnknownLevel {
        row: usize,
        column: String,
        value: String,
    },

    #[error("row {row}: {role} column `{column}` must be fully observed")]
    MissingRequired {
        row: usize,
        column: String,
        role: &'static str,
    },

    #[error("masked cell in column `{column}` at row {row}")]
    MaskedCell { column: String, row: usize },

    #[error("index {index} out of range for {n_rows} rows")]
    IndexOutOfRange { index: usize, n_rows: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown dataset `{0}`")]
    UnknownDataset(String),

    #[error("value `{value}` of column `{column}` is not covered by the binarization rule")]
    UnmappedValue { column: String, value: String },

    #[error("bisection did not converge after {0} steps")]
    NoConvergence(usize),

    #[error("all rows removed by listwise deletion")]
    EmptyAfterDeletion,

    #[error("column `{0}` has no observed values")]
    FullyMissing(String),

    #[error("need at least {needed} donor rows, found {found}")]
    NotEnoughDonors { needed: usize, found: usize },

    #[error("training data contains a single class")]
    SingleClass,

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("{0} is only defined for random forest models")]
    WrongModelKind(&'static str),

    #[error("metric undefined: {0}")]
    UndefinedMetric(&'static str),

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("sensitive group {0} is absent")]
    MissingGroup(u8),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("unbalanced layout: {0}")]
    Unbalanced(String),

    #[error("zero residual variance with nonzero effects")]
    ZeroResidualVariance,

    #[error("degenerate group {0}: needs at least two observations and nonzero variance")]
    DegenerateGroup(usize),

    #[error("unsupported sample size {0}")]
    SampleSize(usize),

    #[error("zero variance sample")]
    ZeroVariance,

    #[error("unknown factor `{0}`")]
    UnknownFactor(String),

    #[error("missing cells: {0}")]
    MissingCells(String),

    #[error("complete test data changed during the run")]
    TestDataModified,

    #[error("cell {cell} failed in {failed} of {iterations} iterations (limit 20%)")]
    TooManyFailures {
        cell: String,
        failed: usize,
        iterations: usize,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
