use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no tokens in input text")]
    NoTokens,

    #[error("{path}: line {line}: malformed record{}: {reason}", id.as_ref().map(|i| format!(" '{i}'")).unwrap_or_default())]
    MalformedRecord {
        path: PathBuf,
        line: usize,
        id: Option<String>,
        reason: String,
    },

    #[error("{0}: file contains no records")]
    EmptyFile(PathBuf),

    #[error("{path}: line {line}: {reason}")]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("knowledge base is inconsistent: {0}")]
    InconsistentKb(String),

    #[error("time step {t} out of range for a question of {n} tokens")]
    StepOutOfRange { t: usize, n: usize },

    #[error("cannot step past the end of the episode (t = {t}, n = {n})")]
    TerminalState { t: usize, n: usize },

    #[error("length mismatch: {what} ({left} vs {right})")]
    LengthMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },

    #[error("invalid dimensions: {0}")]
    InvalidDims(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("episode {index} is stale: stored log-prob {stored} differs from recomputed {recomputed}")]
    StaleEpisode {
        index: usize,
        stored: f64,
        recomputed: f64,
    },

    #[error("no episodes supplied")]
    NoEpisodes,

    #[error("bad file format: {0}")]
    Format(String),

    #[error("unsupported file version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("results and gold questions are misaligned: {0}")]
    Misaligned(String),

    #[error("training diverged: {0}")]
    Diverged(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
