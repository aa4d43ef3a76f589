use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("ingestion error in {path}: {message}")]
    Ingest { path: PathBuf, message: String },
    #[error("config error at {location}: {message}")]
    Config { location: String, message: String },
    #[error("cleaning removed every sample ({report})")]
    EmptyCohort { report: Box<crate::cohort::CleanReport> },
    #[error("imputation failed: {0}")]
    Impute(String),
    #[error("unmapped treatment names: {}", .0.join(", "))]
    UnmappedTreatments(Vec<String>),
    #[error("feature `{0}` not found")]
    UnknownFeature(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("selection failed: {0}")]
    Selection(String),
    #[error("training failed: {0}")]
    Training(String),
    #[error("unsupported model format version {found} (expected {expected})")]
    ModelVersion { found: String, expected: u32 },
    #[error("corrupted model file: {0}")]
    ModelCorrupt(String),
    #[error("domain error: {0}")]
    Domain(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv { path: path.into(), source }
    }
}
