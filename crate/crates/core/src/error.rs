use std::path::PathBuf;

use thiserror::Error;

use crate::mir::{Diagnostic, Position};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown type `{0}`")]
    UnknownType(String),

    #[error("{file}:{line}: syntax error: {message}")]
    Syntax {
        file: String,
        line: u32,
        message: String,
    },

    #[error("program has {} validation error(s); first: {}", .0.len(), .0[0])]
    Invalid(Vec<Diagnostic>),

    #[error("sidecar: {0}")]
    Sidecar(String),

    #[error("{site}: cannot resolve method `{method}` anywhere in the class hierarchy")]
    UnresolvedMethod { site: Position, method: String },

    #[error("entry method `{0}` not found")]
    EntryNotFound(String),

    #[error("no entry points: program declares no methods")]
    NoEntryPoints,

    #[error("expression `{0}` does not occur in the program")]
    UnknownExpression(String),

    #[error("comparison of mismatched state element kinds ({0} vs {1})")]
    KindMismatch(&'static str, &'static str),

    #[error("oracle cannot execute reflective instantiation at {0}")]
    ReflectiveInstantiation(Position),

    #[error("unlabeled unit `{0}` cannot enter a confusion matrix")]
    Unlabeled(String),

    #[error("unit sets differ between the compared outcome vectors")]
    UnitMismatch,

    #[error("insufficient pairs: {0} non-zero differences, need at least 5")]
    InsufficientPairs(usize),

    #[error("verdicts disagree across repetitions for unit `{0}`")]
    UnstableVerdict(String),

    #[error("manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
