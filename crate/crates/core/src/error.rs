use thiserror::Error;

/// Crate-wide error type. Every fallible public operation returns this.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("schema references unknown column {column:?}")]
    UnknownColumn { column: String },

    #[error("row {row}, column {column:?}: cannot parse {value:?} as a number")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },

    #[error("column {column:?} has {count} distinct values; expected at most two")]
    NotBinary { column: String, count: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty {what}")]
    Empty { what: &'static str },

    #[error("labeling budget exhausted")]
    BudgetExhausted,

    #[error("id {id} is not in the unlabeled pool")]
    NotUnlabeled { id: usize },

    #[error("{measure} is undefined on this table: {reason}")]
    UndefinedMeasure {
        measure: &'static str,
        reason: &'static str,
    },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error("unknown {kind} name {name:?}")]
    UnknownName { kind: &'static str, name: String },

    #[error("split leaves an empty side (n = {n}, train_frac = {train_frac})")]
    DegenerateSplit { n: usize, train_frac: f64 },

    #[error("non-finite value in {context}")]
    NonFinite { context: &'static str },

    #[error("training failed: {0}")]
    Training(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid_param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            name,
            reason: reason.into(),
        }
    }
}
