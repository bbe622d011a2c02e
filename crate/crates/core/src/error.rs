// SPDX-License-Identifier: MIT OR Apache-2.0

//! Error types shared across the workbench.

use std::path::PathBuf;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the library can report.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A primitive received operands whose shapes do not conform.
    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    /// A caller broke an operation's documented precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    /// Invalid configuration value.
    #[error("config error: {0}")]
    Config(String),

    /// Data generation could not satisfy a request.
    #[error("corpus error: {0}")]
    Corpus(String),

    /// Training produced a non-finite loss.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A patch or circuit referenced an edge that does not exist.
    #[error("unknown edge {0}")]
    UnknownEdge(String),

    /// Exact patching was requested on a graph that is too large.
    #[error("graph has {edges} edges, above the exact-patching ceiling of {ceiling}; use EAP-IG scoring instead")]
    OracleCeiling { edges: usize, ceiling: usize },

    /// A pipeline stage is missing an artifact produced by an earlier stage.
    #[error("missing prerequisite from stage `{stage}`: {path}")]
    MissingPrerequisite { stage: String, path: PathBuf },

    /// Stored artifacts were produced under a different configuration.
    #[error("config hash mismatch in {path}: expected {expected}, found {found}")]
    ConfigMismatch {
        path: PathBuf,
        expected: String,
        found: String,
    },

    /// Malformed file contents.
    #[error("format error in {what}: {detail}")]
    Format { what: String, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Shape {
            op,
            detail: detail.into(),
        }
    }

    pub(crate) fn format(what: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Format {
            what: what.into(),
            detail: detail.into(),
        }
    }
}
