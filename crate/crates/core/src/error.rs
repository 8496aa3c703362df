use thiserror::Error;

/// Errors produced by the library.
///
/// `Internal` signals a violated invariant (a bug); every other variant is a
/// problem with the caller's input.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("scenario is not in canonical order: {0}")]
    NonCanonicalScenario(String),
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("scenario mismatch: {0}")]
    ScenarioMismatch(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid correlation point: {0}")]
    InvalidPoint(String),
    #[error("expression is trivial (constant on the no-signalling subspace)")]
    Trivial,
    #[error("expression is not in the orbit of the given representative")]
    NotInOrbit,
    #[error("rank {0} is out of range")]
    RankOutOfRange(String),
    #[error("deterministic strategy count {count} exceeds cap {cap}")]
    StrategyCap { count: String, cap: u64 },
    #[error("bound {given} is not the local bound {local}")]
    NotTight { given: String, local: String },
    #[error("bound set '{0}' is not inheritable under composition")]
    NotInheritable(String),
    #[error("missing bound: {0}")]
    MissingBound(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{0}")]
    Format(String),
    #[error("record is not canonical: {0}")]
    NotCanonical(String),
    #[error("conflicting record for key {0}")]
    Conflict(String),
    #[error("store error: {0}")]
    Store(String),
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl Error {
    pub fn is_internal(&self) -> bool {
        matches!(self, Error::Internal(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
