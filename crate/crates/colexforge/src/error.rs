//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

/// Convenience alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong while running the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("missing file: {0}")]
    MissingFile(PathBuf),

    #[error("malformed metadata in {path}: {reason}")]
    MalformedMetadata { path: PathBuf, reason: String },

    #[error("{table} row {row}: column '{column}' references unknown {kind} '{value}'")]
    DanglingReference {
        table: String,
        row: usize,
        column: String,
        kind: &'static str,
        value: String,
    },

    #[error("duplicate id '{id}' in {table}")]
    DuplicateId { table: String, id: String },

    #[error("replacement table: target '{target}' of '{source}' is itself a replacement source")]
    ChainedExpansion { source: String, target: String },

    #[error("replacement table: '{source}' uses expansion syntax but resolves to a single target")]
    SingletonExpansionWithExpansionSyntax { source: String },

    #[error("replacement table: duplicate source '{0}'")]
    DuplicateSource(String),

    #[error("no dataset with a metadata file found under {0}")]
    EmptyDatasetDir(PathBuf),

    #[error("selection removed every variety")]
    EmptySelection,

    #[error("form normalizes to an empty key")]
    EmptyAfterNormalization,

    #[error("unknown concept '{0}'")]
    UnknownConcept(String),

    #[error("partition does not cover node '{0}'")]
    UncoveredNode(String),

    #[error("network edge {a} -- {b} has no entry in the colexification store")]
    InconsistentInputs { a: String, b: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("gml parse error at line {line}: {reason}")]
    GmlParse { line: usize, reason: String },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Wraps an error with the name of the pipeline stage it occurred in.
    pub fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
