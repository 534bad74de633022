use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(String),
    #[error("empty dataset")]
    EmptyDataset,
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("unexpected column `{0}`")]
    UnexpectedColumn(String),
    #[error("parse error at row {row}, column {column}: `{value}` is not a number")]
    ParseCell {
        row: usize,
        column: String,
        value: String,
    },
    #[error("invalid bounds: {0}")]
    InvalidBounds(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("fewer records than coefficients ({records} < {coefficients})")]
    TooFewRecords { records: usize, coefficients: usize },
    #[error("rank-deficient design matrix (condition estimate {condition:e})")]
    RankDeficient { condition: f64 },
    #[error("actual value is zero; relative deviation undefined")]
    ZeroActual,
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("fronts have different objective senses")]
    SenseMismatch,
    #[error("equality constraints unsupported")]
    EqualityUnsupported,
    #[error("start point {0:?} lies outside the bounds")]
    StartOutOfBounds([f64; 3]),
    #[error("non-finite objective or gradient at {0:?}")]
    NonFinite([f64; 3]),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("degenerate normalization bounds for objective {0}")]
    DegenerateNormalization(usize),
    #[error("utopia value of objective {0} is zero; relative deviation undefined")]
    ZeroUtopia(usize),
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("solving objective {objective} failed: {source}")]
    Solver {
        objective: String,
        #[source]
        source: Box<Error>,
    },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    /// Whether the failure is numerical (as opposed to bad input or configuration).
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::RankDeficient { .. }
            | Error::NonFinite(_)
            | Error::Infeasible(_)
            | Error::ZeroUtopia(_)
            | Error::DegenerateNormalization(_)
            | Error::ZeroActual => true,
            Error::Solver { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
