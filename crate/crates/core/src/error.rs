use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("header mismatch: expected {expected:?}, found {found:?}")]
    HeaderMismatch {
        expected: Vec<String>,
        found: Vec<String>,
    },

    #[error("row {row}: expected {expected} cells, found {found}")]
    ArityError {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("row {row}, column `{column}`: cannot parse {text:?} ({reason})")]
    CellParseError {
        row: usize,
        column: String,
        text: String,
        reason: String,
    },

    #[error("malformed csv: {0}")]
    Csv(String),

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("invalid schema: {0}")]
    InvalidSchema(String),

    #[error("no rows left: {0}")]
    EmptyResult(String),

    #[error("need at least 2 rows to split, got {0}")]
    TooFewRows(usize),

    #[error("invalid split fraction {0}, must lie strictly between 0 and 1")]
    BadFraction(f64),

    #[error("column `{column}`: unknown category {value:?}")]
    UnknownCategory { column: String, value: String },

    #[error("column `{column}`: {reason}")]
    InvalidValue { column: String, reason: String },

    #[error("column `{0}` has no value")]
    MissingValue(String),

    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparameters(String),

    #[error("training set is empty")]
    EmptyTrainingSet,

    #[error("loss became non-finite in cycle {cycle}")]
    NonFiniteLoss { cycle: usize },

    #[error("test set is empty")]
    EmptyTestSet,

    #[error("all test targets are equal; relative metrics are undefined")]
    DegenerateTargets,

    #[error("model was trained for {model} but the scenario targets {scenario}")]
    ObjectTypeMismatch { model: String, scenario: String },

    #[error("no candidates supplied")]
    NoCandidates,

    #[error("column `{0}` is not a numeric feature")]
    NonNumericParameter(String),

    #[error("bad sweep range: lo={lo}, hi={hi}, steps={steps}")]
    BadRange { lo: f64, hi: f64, steps: usize },

    #[error("unsupported model format version {0}")]
    UnsupportedVersion(u32),

    #[error("schema fingerprint mismatch: file says {stored}, schema hashes to {computed}")]
    FingerprintMismatch { stored: String, computed: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable name used in structured error payloads.
    pub fn code(&self) -> &'static str {
        match self {
            Error::HeaderMismatch { .. } => "HeaderMismatch",
            Error::ArityError { .. } => "ArityError",
            Error::CellParseError { .. } => "CellParseError",
            Error::Csv(_) => "CsvError",
            Error::MissingColumn(_) => "MissingColumn",
            Error::UnknownColumn(_) => "UnknownColumn",
            Error::InvalidSchema(_) => "InvalidSchema",
            Error::EmptyResult(_) => "EmptyResult",
            Error::TooFewRows(_) => "TooFewRows",
            Error::BadFraction(_) => "BadFraction",
            Error::UnknownCategory { .. } => "UnknownCategory",
            Error::InvalidValue { .. } => "InvalidValue",
            Error::MissingValue(_) => "MissingValue",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::InvalidHyperparameters(_) => "InvalidHyperparameters",
            Error::EmptyTrainingSet => "EmptyTrainingSet",
            Error::NonFiniteLoss { .. } => "NonFiniteLoss",
            Error::EmptyTestSet => "EmptyTestSet",
            Error::DegenerateTargets => "DegenerateTargets",
            Error::ObjectTypeMismatch { .. } => "ObjectTypeMismatch",
            Error::NoCandidates => "NoCandidates",
            Error::NonNumericParameter(_) => "NonNumericParameter",
            Error::BadRange { .. } => "BadRange",
            Error::UnsupportedVersion(_) => "UnsupportedVersion",
            Error::FingerprintMismatch { .. } => "FingerprintMismatch",
            Error::Json(_) => "JsonError",
            Error::Io(_) => "IoError",
        }
    }

    /// Column the error refers to, if any.
    pub fn column(&self) -> Option<&str> {
        match self {
            Error::CellParseError { column, .. }
            | Error::UnknownCategory { column, .. }
            | Error::InvalidValue { column, .. } => Some(column),
            Error::MissingColumn(c)
            | Error::UnknownColumn(c)
            | Error::MissingValue(c)
            | Error::NonNumericParameter(c) => Some(c),
            _ => None,
        }
    }

    /// 1-based data row (header excluded) the error refers to, if any.
    pub fn row(&self) -> Option<usize> {
        match self {
            Error::CellParseError { row, .. } | Error::ArityError { row, .. } => Some(*row),
            _ => None,
        }
    }
}
