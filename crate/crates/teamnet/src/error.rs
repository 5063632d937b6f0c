//! Crate-wide error type with CLI exit-code mapping.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("E_INPUT: {table} row {row}: field `{field}`: {message}")]
    MalformedRow {
        table: String,
        row: usize,
        field: String,
        message: String,
    },
    #[error("E_INPUT: credits row {row} references unknown project_id `{project_id}`")]
    DanglingProject { row: usize, project_id: String },
    #[error("E_INPUT: duplicate project_id `{0}`")]
    DuplicateProject(String),
    #[error("E_INPUT: conflicting gender labels for person `{person_id}` (credits row {row})")]
    ConflictingGender { person_id: String, row: usize },
    #[error("E_INPUT: {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("E_INPUT: unsupported input format for `{0}` (expected .csv, .jsonl or .ndjson)")]
    UnknownFormat(PathBuf),
    #[error("E_CONFIG: {0}")]
    Config(String),
    #[error("E_NUMERIC: column `{0}` has zero variance")]
    ZeroVariance(String),
    #[error("E_NUMERIC: design matrix is rank deficient; near-collinear columns: {}", .0.join(", "))]
    RankDeficient(Vec<String>),
    #[error("E_NUMERIC: {0}")]
    Numeric(String),
    #[error("E_INPUT: {0}")]
    Input(String),
}

impl Error {
    /// Process exit code for the CLI: 2 input, 3 config, 4 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 3,
            Error::ZeroVariance(_) | Error::RankDeficient(_) | Error::Numeric(_) => 4,
            _ => 2,
        }
    }
}
