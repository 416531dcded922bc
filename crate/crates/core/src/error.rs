use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("I/O error while processing document {doc_id}: {source}")]
    DocIo {
        doc_id: String,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("empty training corpus")]
    EmptyCorpus,

    #[error("target vocabulary size {target} must exceed {minimum} (byte alphabet plus special tokens)")]
    VocabTooSmall { target: usize, minimum: usize },

    #[error("unknown token id {0}")]
    UnknownTokenId(u32),

    #[error("malformed vocabulary: {0}")]
    MalformedVocab(String),

    #[error("not enough eligible {label} pairs: needed {needed}, found {available}")]
    InsufficientPairs {
        label: &'static str,
        needed: usize,
        available: usize,
    },

    #[error("length mismatch: {left} predictions vs {right} gold labels")]
    LengthMismatch { left: usize, right: usize },

    #[error("tag sequence {index} has mismatched length: {pred} predicted vs {gold} gold tags")]
    SequenceLengthMismatch {
        index: usize,
        pred: usize,
        gold: usize,
    },

    #[error("empty input")]
    EmptyInput,

    #[error("empty label set")]
    EmptyLabelSet,

    #[error("label {0:?} not in declared label set")]
    UnknownLabel(String),

    #[error("zero variance input: Pearson correlation undefined")]
    ZeroVariance,

    #[error("unknown BIO tag {0:?}")]
    UnknownTag(String),

    #[error("ALUE task set mismatch: missing [{}], unexpected [{}]", missing.join(", "), extra.join(", "))]
    AlueTaskMismatch {
        missing: Vec<String>,
        extra: Vec<String>,
    },

    #[error("empty task list")]
    EmptyTaskList,

    #[error("duplicate run record for task {task}, model {model}, config {config}, seed {seed}")]
    DuplicateRun {
        task: String,
        model: String,
        config: String,
        seed: u64,
    },

    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(location: impl Into<String>, message: impl ToString) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.to_string(),
        }
    }
}
