//! Crate-wide error type.

use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A record in an ingest stream failed to parse or validate.
    #[error("record at line {line}: {msg}")]
    MalformedRecord { line: usize, msg: String },

    /// An ingest format name that is neither `csv` nor `jsonl`.
    #[error("unknown ingest format `{0}` (expected `csv` or `jsonl`)")]
    UnknownFormat(String),

    /// State sequences of different lengths were paired.
    #[error("state sequence length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    /// A state sequence was too short for the requested operation.
    #[error("state sequence has {got} entries, need at least {need}")]
    SequenceTooShort { need: usize, got: usize },

    /// A state value other than +1/-1.
    #[error("invalid state value {0}, states must be +1 or -1")]
    InvalidState(i8),

    /// Relaxation level below the minimum admissible for the model degree.
    #[error(
        "relaxation level {level} too low: observable degree {degree} requires level >= {min}"
    )]
    LevelTooLow {
        level: usize,
        degree: usize,
        min: usize,
    },

    /// An arc of the influence graph is not covered by the state series.
    #[error("arc {from} -> {to}: node ({node}, {reference}) missing from state series")]
    ArcNotCovered {
        from: String,
        to: String,
        node: String,
        reference: String,
    },

    /// Structural problem in an SDP description.
    #[error("invalid SDP problem: {0}")]
    InvalidProblem(String),

    /// SDPA file could not be parsed.
    #[error("SDPA parse error at line {line}: {msg}")]
    SdpaParse { line: usize, msg: String },

    /// External solver missing, failed, or produced unreadable output.
    #[error("external solver: {0}")]
    ExternalSolver(String),

    /// Invalid configuration or argument.
    #[error("{0}")]
    InvalidInput(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
