//! Error type shared by every module of the engine.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("assertion text must be non-empty")]
    EmptyText,
    #[error("duplicate fact key: {0}")]
    DuplicateFactKey(String),
    #[error("fact is malformed: {0}")]
    MalformedFact(String),
    #[error("operation requires the {expected} oracle mode")]
    ModeMismatch { expected: &'static str },
    #[error("oracle failure: {0}")]
    OracleFailure(String),
    #[error("decomposition did not converge within the retry budget: {0}")]
    NonConvergent(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("no morphism: {src} is not answerable by {dst}")]
    NotAnswerable { src: String, dst: String },
    #[error("document has not been processed: {0}")]
    NotProcessed(String),
    #[error("document length is zero")]
    ZeroLength,
    #[error("category has no objects")]
    EmptyCategory,
    #[error("document is empty")]
    EmptyDocument,
    #[error("input is empty")]
    EmptyInput,
    #[error("lattice too large to materialize: {0} selections exceed the limit")]
    TooLarge(usize),
    #[error("selection is not hierarchical (pass the override flag to allow it)")]
    NonHierarchical,
    #[error("unknown node: {0}")]
    UnknownNode(String),
    #[error("invalid summary: {0}")]
    InvalidSummary(String),
    #[error("addition overlaps existing content: {0}")]
    OverlapWithExisting(String),
    #[error("unknown attach node: {0}")]
    UnknownAttachNode(String),
    #[error("relation dimensions do not match")]
    DimensionMismatch,
    #[error("relation labels do not match")]
    LabelMismatch,
    #[error("unknown summarization strategy: {0}")]
    UnknownStrategy(String),
    #[error("insufficient structure for task generation: {0}")]
    InsufficientStructure(String),
    #[error("malformed task: {0}")]
    MalformedTask(String),
    #[error("broken trace relation: {0}")]
    BrokenTrace(String),
    #[error("trace has no entry for {0}")]
    MissingTrace(String),
    #[error("invalid document fixture: {0}")]
    InvalidFixture(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
