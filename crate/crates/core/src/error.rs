use thiserror::Error;

use crate::enumcore::Stage;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("horizon exceeded: stage {stage} > horizon {horizon}")]
    HorizonExceeded { stage: Stage, horizon: Stage },

    #[error("element {element} enumerated twice")]
    DuplicateElement { element: usize },

    #[error("domain mismatch: element {element} outside separator of length {length}")]
    DomainMismatch { element: usize, length: usize },

    #[error("bound table exhausted at x = {x}")]
    BoundTableExhausted { x: usize },

    #[error("invalid use bound: {0}")]
    InvalidBound(String),

    #[error("invalid oracle program: {0}")]
    InvalidProgram(String),

    #[error("m-sequence too short: need a block ending at or beyond {needed}")]
    MSequenceTooShort { needed: usize },

    #[error("undecided at horizon for block ({lo}, {hi}]")]
    UndecidedAtHorizon { lo: i64, hi: i64 },

    #[error("not settled by horizon {horizon}")]
    NotSettled { horizon: Stage },

    #[error("window {window} exceeds horizon {horizon}")]
    WindowExceedsHorizon { window: usize, horizon: Stage },

    #[error("no such attempt: {0}")]
    NoSuchAttempt(usize),

    #[error("attempt {attempt} needs {needed} accepted certificate(s)")]
    MissingCertificate { attempt: usize, needed: usize },

    #[error("search budget exhausted at stage {stage}")]
    SearchBudget { stage: Stage },

    /// A construction reached a state its correctness argument rules out.
    #[error("hard fault [{claim}] at stage {stage}: {detail}")]
    HardFault {
        claim: String,
        stage: Stage,
        detail: String,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("schema error at line {line}: {message}")]
    Schema { line: usize, message: String },

    #[error("hypothesis violation: {0}")]
    Hypothesis(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
