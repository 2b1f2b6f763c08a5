use thiserror::Error;

/// Errors produced while parsing inputs or running the pooling pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A line in an input file could not be parsed.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Input was well-formed but violates a domain invariant.
    #[error("validation error: {0}")]
    Validation(String),

    /// An operation was called with arguments outside its domain.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A variable-depth policy was asked to pool a (query, system) pair
    /// that has no normalized QPP estimate.
    #[error("missing QPP estimates for {} (query, system) pair(s): {}", .0.len(), format_pairs(.0))]
    MissingEstimates(Vec<(String, String)>),

    /// A metric is undefined for the given input (constant vector, no relevant documents, ...).
    #[error("undefined metric: {0}")]
    Undefined(String),

    /// A pooling policy failed inside the simulation.
    #[error("policy {policy}: {source}")]
    Policy {
        policy: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse { line, message: message.into() }
    }

    pub(crate) fn validation(message: impl Into<String>) -> Self {
        Error::Validation(message.into())
    }

    pub(crate) fn precondition(message: impl Into<String>) -> Self {
        Error::Precondition(message.into())
    }

    pub(crate) fn undefined(message: impl Into<String>) -> Self {
        Error::Undefined(message.into())
    }
}

fn format_pairs(pairs: &[(String, String)]) -> String {
    const SHOWN: usize = 10;
    let mut out = pairs
        .iter()
        .take(SHOWN)
        .map(|(q, s)| format!("({q}, {s})"))
        .collect::<Vec<_>>()
        .join(", ");
    if pairs.len() > SHOWN {
        out.push_str(&format!(", ... and {} more", pairs.len() - SHOWN));
    }
    out
}
