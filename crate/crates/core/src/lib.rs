//! Documents as categories of question-answer pairs.
//!
//! A document is processed into an abstractive DAG of one-sentence summaries,
//! converted to core QA pairs, organized into a thin category ordered by
//! answerability, and orthogonalized into atomic non-overlapping QAs. On top
//! of those structures the crate computes summaries and extensions with their
//! factorizations, six information measures, rate-distortion curves of
//! summarization schemes, relations between documents, and verifiable
//! consistency tasks.
//!
//! All judgement calls flow through a single [`oracle::SemanticOracle`] seam:
//! a deterministic fact-set reference oracle makes every algebraic claim
//! exactly testable, and an HTTP-backed LLM adapter with a replayable cache
//! covers natural-language documents.

pub mod algebra;
pub mod category;
pub mod constraints;
pub mod error;
pub mod lattice;
pub mod measures;
pub mod model;
pub mod oracle;
pub mod ortho;
pub mod pipeline;
pub mod rd;
pub mod relations;
pub mod rhetoric;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::{ExactRatio, Real};

/// Default floating scalar of the reference reports.
pub type Real64 = f64;
/// Narrow scalar alias; every measure is generic over [`Real`].
pub type Real32 = f32;
