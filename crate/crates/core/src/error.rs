use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse classification of failures, used by the CLI to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Unreadable, malformed, or out-of-contract input.
    Input,
    /// Numerically degenerate data: constant nodes, singular fits, no cavities.
    Numeric,
    /// Evaluation protocol cannot be run on the given data.
    Protocol,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed input at line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("non-finite value at sample {sample}, node {node}")]
    NonFinite { sample: usize, node: usize },
    #[error("{n_nodes} nodes exceeds the cap of {cap}")]
    NodeCap { n_nodes: usize, cap: usize },
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("zero-variance nodes {0:?} cannot be correlated")]
    DegenerateNodes(Vec<usize>),
    #[error("need at least 2 non-degenerate nodes, got {0}")]
    TooFewNodes(usize),
    #[error("diagram has no cavities left after filtering; summary is undefined")]
    NoCavities,
    #[error("design matrix is rank deficient")]
    SingularFit,
    #[error("oracle limited to {limit} vertices, got {got}")]
    OracleTooLarge { limit: usize, got: usize },
    #[error("need at least {needed} records, got {got}")]
    InsufficientRecords { needed: usize, got: usize },
    #[error("leave-one-group-out needs at least 2 groups, got {0}")]
    TooFewGroups(usize),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Io { .. }
            | Error::Malformed { .. }
            | Error::NonFinite { .. }
            | Error::NodeCap { .. }
            | Error::TooFewSamples(_)
            | Error::Invalid(_)
            | Error::OracleTooLarge { .. } => ErrorKind::Input,
            Error::DegenerateNodes(_)
            | Error::TooFewNodes(_)
            | Error::NoCavities
            | Error::SingularFit => ErrorKind::Numeric,
            Error::InsufficientRecords { .. } | Error::TooFewGroups(_) => ErrorKind::Protocol,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn malformed(line: usize, message: impl Into<String>) -> Self {
        Error::Malformed {
            line,
            message: message.into(),
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        let line = e
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or_default();
        Error::malformed(line, e.to_string())
    }
}
