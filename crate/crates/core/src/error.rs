use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// One out-of-range code found while validating a case.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub code: u8,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}={}", self.field, self.code)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid schema: {0}")]
    InvalidSchema(String),

    #[error("invalid frame span: f_start={f_start}, f_end={f_end}, rate={rate}")]
    InvalidSpan { f_start: u64, f_end: u64, rate: f64 },

    #[error("negative or non-finite duration: {0}")]
    NegativeDuration(f64),

    #[error("invalid case: {}", join(.0))]
    InvalidCase(Vec<Violation>),

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("schema mismatch: unexpected headers [{}]", .unexpected.join(","))]
    SchemaMismatch { unexpected: Vec<String> },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("row {0} is unlabeled")]
    UnlabeledRow(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("k={k} is too large (limit {limit})")]
    KTooLarge { k: usize, limit: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("invalid k range [{k_min}, {k_max}]")]
    RangeInvalid { k_min: usize, k_max: usize },

    #[error("dataset contains a single class")]
    SingleClass,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("loss became non-finite at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },

    #[error("fold {fold} lacks one of the classes")]
    FoldTooSmall { fold: usize },

    #[error("unsupported file version: {found}")]
    VersionMismatch { found: String },

    #[error("corrupt file at line {line}: {message}")]
    CorruptFile { line: u64, message: String },

    #[error("driver mismatch: store belongs to {expected}, case carries {got:?}")]
    DriverMismatch {
        expected: String,
        got: Option<String>,
    },

    #[error("case base is empty")]
    EmptyCaseBase,

    #[error("all candidate solutions were excluded")]
    NoViableSolution,

    #[error("missing artifact: {}", .0.display())]
    MissingArtifact(PathBuf),

    #[error("stage {stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("io error on {}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn join(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
