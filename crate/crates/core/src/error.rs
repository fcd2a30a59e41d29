use std::io;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("line {line}: malformed timestamp {value:?} (expected YYYY-MM-DD HH:MM:SS)")]
    MalformedTimestamp { line: u64, value: String },

    #[error("line {line}: expected a {expected} s step, found {found} s")]
    NonUniformCadence { line: u64, expected: i64, found: i64 },

    #[error("line {line}: expected {expected} cells, found {found}")]
    RaggedRow { line: u64, expected: usize, found: usize },

    #[error("line {line}, column {column:?}: invalid value {value:?}")]
    InvalidValue {
        line: u64,
        column: String,
        value: String,
    },

    #[error("need at least {needed} rows, found {found}")]
    TooFewRows { needed: usize, found: usize },

    #[error("insufficient history: referent would start at {referent_start}, frame starts at {frame_start}")]
    InsufficientHistory {
        referent_start: i64,
        frame_start: i64,
    },

    #[error("span [{start}, {end}) lies outside the frame [{frame_start}, {frame_end})")]
    OutOfRange {
        start: i64,
        end: i64,
        frame_start: i64,
        frame_end: i64,
    },

    #[error("frame too short: {rows} rows cover {covered} s, a single window needs {needed} s")]
    FrameTooShort { rows: usize, covered: i64, needed: i64 },

    #[error("frame contains missing values; fill them before scanning")]
    MissingValues,

    #[error("split leaves a side without rows of one class ({0})")]
    DegenerateSplit(String),

    #[error("training data contains a single class")]
    SingleClass,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("class fractions must sum to 1, got {0}")]
    FractionsNotNormalized(f64),

    #[error("model has no positive estimator weight")]
    ZeroAlphas,

    #[error("feature attribution is only available for boosted-tree windows")]
    AttributionUnsupported,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
