//! Crate-wide error type.

use thiserror::Error;

/// Category attached to backend failures so callers can decide on retries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendErrorKind {
    /// Transport-level failure (connection refused, timeout, DNS).
    Transport,
    /// Non-success HTTP status.
    Status,
    /// Response body did not have the expected shape.
    Malformed,
    /// Mock script had no matching rule in strict mode.
    Unscripted,
}

impl std::fmt::Display for BackendErrorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            BackendErrorKind::Transport => "transport",
            BackendErrorKind::Status => "status",
            BackendErrorKind::Malformed => "malformed",
            BackendErrorKind::Unscripted => "unscripted",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty chain: input text contains no steps")]
    EmptyChain,

    #[error("no final answer candidate found")]
    AnswerMissing,

    #[error("parse error at byte {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("evaluation error: {0}")]
    Eval(String),

    #[error("backend error ({kind}): {message}")]
    Backend {
        kind: BackendErrorKind,
        message: String,
    },

    #[error("backend does not support {0}")]
    Capability(String),

    #[error("score file misaligned: chain has {expected} tokens, file has {got}")]
    Alignment { expected: usize, got: usize },

    #[error("step is not injectable: {0}")]
    NotInjectable(String),

    #[error("impact fit failed: {0}")]
    Fit(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("correction candidate malformed: {0}")]
    CandidateMalformed(String),

    #[error("both correction candidates unusable")]
    CorrectionFailed,

    #[error("duplicate problem id '{id}' at line {line}")]
    DuplicateId { id: String, line: usize },

    #[error("dataset parse error at line {line}: {message}")]
    Dataset { line: usize, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn backend(kind: BackendErrorKind, message: impl Into<String>) -> Self {
        Error::Backend {
            kind,
            message: message.into(),
        }
    }

    /// Transport and status failures are worth retrying; everything else is not.
    pub fn is_retryable(&self) -> bool {
        matches!(
            self,
            Error::Backend {
                kind: BackendErrorKind::Transport | BackendErrorKind::Status,
                ..
            }
        )
    }

    /// Short category name used for CLI exit codes and failure accounting.
    pub fn category(&self) -> &'static str {
        match self {
            Error::EmptyChain | Error::AnswerMissing | Error::DegenerateInput(_) => "input",
            Error::Parse { .. } | Error::Eval(_) => "arith",
            Error::Backend { .. } | Error::Capability(_) => "backend",
            Error::Alignment { .. } => "alignment",
            Error::NotInjectable(_) => "inject",
            Error::Fit(_) => "fit",
            Error::CandidateMalformed(_) | Error::CorrectionFailed => "correction",
            Error::DuplicateId { .. } | Error::Dataset { .. } => "dataset",
            Error::Config(_) => "config",
            Error::Io(_) | Error::Json(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
