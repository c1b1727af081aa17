use thiserror::Error;

/// Errors raised anywhere in the analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("input is not valid UTF-8: {0}")]
    Utf8(#[from] std::str::Utf8Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("unknown input format `{0}` (expected csv or jsonl)")]
    UnknownFormat(String),

    #[error("header is missing required column `{0}`")]
    MissingColumn(String),

    #[error("{rejected} of {total} lines rejected; aborting ingest ({detail})")]
    TooManyRejected {
        rejected: usize,
        total: usize,
        detail: String,
    },

    #[error("venue `{venue_id}` has conflicting subcategories `{first}` and `{second}`")]
    VenueConflict {
        venue_id: String,
        first: String,
        second: String,
    },

    #[error("index table line {line}: {reason}")]
    IndexTable { line: usize, reason: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("region {0} matches no records")]
    RegionNotFound(String),

    #[error("analysis unit `{0}` not found in scope")]
    UnknownUnit(String),

    #[error("scope {scope} has no {gender} check-ins; popularity difference is undefined")]
    MissingGender { scope: String, gender: String },

    #[error("null model replicate {replicate} produced a single-gender sample {retries} times")]
    DegenerateReplicate { replicate: usize, retries: usize },

    #[error("gini input invalid: {0}")]
    GiniInput(String),

    #[error("preference vector for `{0}` is all zeros; its direction is undefined")]
    ZeroVector(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("rank correlation undefined: {0}")]
    Degenerate(String),

    #[error("regions missing from index `{index}`: {missing:?}")]
    MissingFromIndex { index: String, missing: Vec<String> },

    #[error("impossible synthetic spec: {0}")]
    ImpossibleSpec(String),
}

pub type Result<T> = std::result::Result<T, Error>;
