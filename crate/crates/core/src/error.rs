use std::fmt;

use thiserror::Error;

/// Line/column position in a source text, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{pos}: {message}")]
pub struct ParseError {
    pub pos: Pos,
    pub message: String,
}

impl ParseError {
    pub fn new(pos: Pos, message: impl Into<String>) -> Self {
        ParseError {
            pos,
            message: message.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at {0}")]
    Parse(#[from] ParseError),

    #[error("unbound variable `{0}`")]
    UnboundVariable(String),

    #[error("domain mismatch for `{name}`: expected {expected}, found {found}")]
    DomainMismatch {
        name: String,
        expected: String,
        found: String,
    },

    #[error("unsupported formula shape: {0}")]
    UnsupportedFormula(String),

    #[error("existential variable `{var}` ranges over empty domain `{domain}`")]
    EmptyDomain { var: String, domain: String },

    #[error("undeclared predicate `{0}`")]
    UndeclaredPredicate(String),

    #[error("predicate `{name}` expects {expected} arguments, found {found}")]
    ArityMismatch {
        name: String,
        expected: usize,
        found: usize,
    },

    #[error("inconsistent evidence for {0}")]
    InconsistentEvidence(String),

    #[error("hard rule #{formula} `{rule}` violated by evidence under {binding}")]
    Unsatisfiable {
        formula: usize,
        rule: String,
        binding: String,
    },

    #[error("no state satisfying all hard clauses found ({unsatisfied} hard clauses left violated)")]
    NoSatisfyingState { unsatisfied: usize },

    #[error("resource ceiling exceeded: {0}")]
    ResourceCeiling(String),

    #[error("incomplete world: {0}")]
    IncompleteWorld(String),

    #[error("probability {0} outside the open interval (0, 1)")]
    ProbabilityOutOfRange(f64),

    #[error("weight learning diverged: |w[{index}]| = {value:.3}")]
    Divergence { index: usize, value: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("singular in-class covariance (smallest eigenvalue {0:e}); use a positive regularizer")]
    SingularCovariance(f64),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn in_stage(self, stage: impl Into<String>) -> Self {
        Error::Stage {
            stage: stage.into(),
            source: Box::new(self),
        }
    }

    /// The innermost error, looking through stage wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
