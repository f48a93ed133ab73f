use std::io;

use thiserror::Error;

use crate::lowprec::Cell;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("null cell at row {row}, column `{column}`")]
    NullCell { row: usize, column: String },
    #[error("non-numeric cell at row {row}, column `{column}`: {text:?}")]
    NonNumericCell {
        row: usize,
        column: String,
        text: String,
    },
    #[error("invalid label at row {row}: {value:?} (expected 0 or 1)")]
    InvalidLabel { row: usize, value: String },
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("{} cell(s) overflowed to infinity at {format}", cells.len())]
    OverflowToInfinity {
        format: &'static str,
        cells: Vec<Cell>,
    },
    #[error("raw matrix has {found} bytes, expected {expected}")]
    RawSize { expected: usize, found: usize },

    #[error("split would leave an empty partition (train {train}, test {test})")]
    DegenerateSplit { train: usize, test: usize },
    #[error("both classes must be present (class 0: {negatives}, class 1: {positives})")]
    SingleClass { negatives: usize, positives: usize },
    #[error("SMOTE needs at least two minority rows, found {0}")]
    TooFewMinority(usize),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("runs are not comparable: {0}")]
    IncomparableRuns(String),
    #[error("nothing to chart")]
    EmptyChart,

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at(stage: &'static str) -> impl FnOnce(Error) -> Error {
        move |source| Error::Stage {
            stage,
            source: Box::new(source),
        }
    }
}
