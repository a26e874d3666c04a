use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("record {record}: {message}")]
    InvalidPair { record: usize, message: String },

    #[error("{}malformed alignment token `{token}` (expected `i-j`)", record_prefix(*record))]
    MalformedLink { record: Option<usize>, token: String },

    #[error(
        "{}alignment link {src}-{tgt} out of bounds for source length {source_len}, target length {target_len}",
        record_prefix(*record)
    )]
    LinkOutOfBounds {
        record: Option<usize>,
        src: usize,
        tgt: usize,
        source_len: usize,
        target_len: usize,
    },

    #[error("line count mismatch: {what} ({left} vs {right})")]
    CountMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },

    #[error("unknown template `{0}`")]
    UnknownTemplate(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("round {round}: model returned no candidates while source remains")]
    EmptyBeam { round: usize },

    #[error("round {round}: scripted model has no entry for this round")]
    ScriptExhausted { round: usize },

    #[error("invalid delay schedule: {0}")]
    InvalidDelays(String),

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("no target words committed")]
    NoTargetWords,

    #[error("line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn record_prefix(record: Option<usize>) -> String {
    match record {
        Some(id) => format!("record {id}: "),
        None => String::new(),
    }
}

impl Error {
    /// Attaches a record ordinal to alignment errors raised without one.
    pub fn with_record(self, id: usize) -> Self {
        match self {
            Error::MalformedLink { token, .. } => Error::MalformedLink {
                record: Some(id),
                token,
            },
            Error::LinkOutOfBounds {
                src,
                tgt,
                source_len,
                target_len,
                ..
            } => Error::LinkOutOfBounds {
                record: Some(id),
                src,
                tgt,
                source_len,
                target_len,
            },
            other => other,
        }
    }
}
