//! The semantic oracle: the single seam through which all human-like
//! judgement flows (answerability, consistency, chunking, summarizing,
//! decomposition).
//!
//! Two implementations: [`FactSetOracle`], a deterministic reference over
//! exact fact payloads, and [`LlmOracle`], an HTTP chat-completion adapter
//! with a persistent replayable cache.

mod cache;
mod factset;
mod llm;

pub use cache::{CacheRecord, OracleCache};
pub use factset::FactSetOracle;
pub use llm::{EndpointConfig, LlmOracle, PROMPT_TEMPLATE_VERSION};

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Assertion, Mode, QAPair};

/// Verdict of an answerability check. `consistent` implies `addressable`:
/// an assertion can only agree with an answer it can produce at all.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerVerdict {
    pub addressable: bool,
    pub consistent: bool,
}

impl AnswerVerdict {
    pub fn new(addressable: bool, consistent: bool) -> Self {
        AnswerVerdict { addressable, consistent: consistent && addressable }
    }
}

/// A half-open byte span of some source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TextSpan {
    pub start: usize,
    pub end: usize,
}

impl TextSpan {
    pub fn new(start: usize, end: usize) -> Self {
        TextSpan { start, end }
    }

    pub fn slice<'a>(&self, text: &'a str) -> &'a str {
        &text[self.start..self.end]
    }

    pub fn contains(&self, other: &TextSpan) -> bool {
        self.start <= other.start && other.end <= self.end
    }
}

/// Raw decomposition output of the oracle; wrapped and validated by
/// [`crate::algebra::decomp`]. Components may be rendered as several QAs.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecompParts {
    pub left: Vec<QAPair>,
    pub mid: Vec<QAPair>,
    pub right: Vec<QAPair>,
}

impl DecompParts {
    pub fn has_overlap(&self) -> bool {
        !self.mid.is_empty()
    }
}

pub trait SemanticOracle: Send + Sync {
    fn mode(&self) -> Mode;

    /// Can assertion `a` answer the question of `qa`, and does its answer agree?
    fn answers(&self, a: &Assertion, qa: &QAPair) -> Result<AnswerVerdict>;

    /// The canonical set of questions the assertion can answer.
    fn question_keys(&self, a: &Assertion) -> Result<BTreeSet<String>>;

    /// Are the two assertions logically consistent propositions?
    fn consistent(&self, a: &Assertion, b: &Assertion) -> Result<bool>;

    /// Split text into 2..=fanout_limit ordered, non-overlapping,
    /// concatenation-covering spans. A single sentence is returned whole.
    fn chunk(&self, text: &str, fanout_limit: usize) -> Result<Vec<TextSpan>>;

    /// One-sentence abstractive summary of a chunk.
    fn summarize_chunk(&self, text: &str) -> Result<Assertion>;

    /// Restate an assertion as one or more core QA pairs capturing all of its
    /// information; compound assertions split into sub-statements.
    fn core_qas(&self, a: &Assertion) -> Result<Vec<QAPair>>;

    /// Decompose a pair of QAs into (left-only, shared, right-only) pieces.
    fn decompose_pair(&self, qa1: &QAPair, qa2: &QAPair) -> Result<DecompParts>;

    /// Probe-question panel spanning the union of two assertions; drives the
    /// metric in llm mode.
    fn probe_questions(&self, a: &Assertion, b: &Assertion) -> Result<Vec<String>>;

    /// Can the assertion answer a bare question at all?
    fn addresses_question(&self, a: &Assertion, question: &str) -> Result<bool>;
}

pub(crate) fn require_facts<'a>(a: &'a Assertion) -> Result<&'a crate::model::FactSet> {
    a.facts.as_ref().ok_or(Error::ModeMismatch { expected: "fact-set" })
}

/// Deterministic sentence split used to stop chunk recursion; fact-set
/// documents arrive pre-chunked, so this only guides llm-mode structure.
pub fn split_sentences(text: &str) -> Vec<TextSpan> {
    let bytes = text.as_bytes();
    let mut spans = Vec::new();
    let mut start = 0usize;
    let mut i = 0usize;
    while i < bytes.len() {
        if matches!(bytes[i], b'.' | b'!' | b'?') {
            let mut end = i + 1;
            while end < bytes.len() && matches!(bytes[end], b'.' | b'!' | b'?') {
                end += 1;
            }
            if end >= bytes.len() || bytes[end].is_ascii_whitespace() {
                spans.push(TextSpan::new(start, end));
                while end < bytes.len() && bytes[end].is_ascii_whitespace() {
                    end += 1;
                }
                start = end;
                i = end;
                continue;
            }
        }
        i += 1;
    }
    if start < bytes.len() && !text[start..].trim().is_empty() {
        spans.push(TextSpan::new(start, bytes.len()));
    }
    spans
}
