//! Deterministic reference oracle over exact fact payloads.
//!
//! Addressability is key-level (can the question be answered at all),
//! agreement is value-level, and decomposition splits on exact (key, values)
//! identity. This split is what reproduces the metric's half-distance example
//! while keeping decomposition information-conserving.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::model::{Assertion, Mode, QAPair};

use super::{require_facts, AnswerVerdict, DecompParts, SemanticOracle, TextSpan};

/// Pure reference oracle: every operation is a deterministic function of its
/// arguments.
#[derive(Debug, Default, Clone, Copy)]
pub struct FactSetOracle;

impl FactSetOracle {
    pub fn new() -> Self {
        FactSetOracle
    }

    fn effective_keys(a: &Assertion) -> Result<BTreeSet<String>> {
        require_facts(a)?;
        Ok(a.information_keys())
    }
}

impl SemanticOracle for FactSetOracle {
    fn mode(&self) -> Mode {
        Mode::FactSet
    }

    fn answers(&self, a: &Assertion, qa: &QAPair) -> Result<AnswerVerdict> {
        let a_facts = require_facts(a)?;
        let q_facts = require_facts(&qa.core)?;
        let a_keys = Self::effective_keys(a)?;
        let addressable = q_facts.keys().all(|k| a_keys.contains(k));
        let consistent = addressable
            && q_facts.iter().all(|(k, q_vals)| {
                a_facts
                    .values_of(k)
                    .map(|a_vals| a_vals.is_subset(q_vals))
                    .unwrap_or(false)
            });
        Ok(AnswerVerdict::new(addressable, consistent))
    }

    fn question_keys(&self, a: &Assertion) -> Result<BTreeSet<String>> {
        Self::effective_keys(a)
    }

    fn consistent(&self, a: &Assertion, b: &Assertion) -> Result<bool> {
        let fa = require_facts(a)?;
        let fb = require_facts(b)?;
        Ok(fa.conflicting_keys(fb).is_empty())
    }

    fn chunk(&self, _text: &str, _fanout_limit: usize) -> Result<Vec<TextSpan>> {
        // fact-set documents arrive pre-chunked
        Err(Error::ModeMismatch { expected: "llm" })
    }

    fn summarize_chunk(&self, _text: &str) -> Result<Assertion> {
        Err(Error::ModeMismatch { expected: "llm" })
    }

    fn core_qas(&self, a: &Assertion) -> Result<Vec<QAPair>> {
        let facts = require_facts(a)?.clone();
        let question = crate::model::render_question(&facts);
        let answer = crate::model::render_answer(&facts);
        Ok(vec![QAPair::new(question, answer, a.clone())])
    }

    fn decompose_pair(&self, qa1: &QAPair, qa2: &QAPair) -> Result<DecompParts> {
        let f1 = require_facts(&qa1.core)?;
        let f2 = require_facts(&qa2.core)?;
        let mid_facts = f1.shared_exact(f2);
        let left_facts = f1.minus_exact(&mid_facts);
        let right_facts = f2.minus_exact(&mid_facts);

        let mut parts = DecompParts::default();
        if !mid_facts.is_empty() {
            parts.mid.push(QAPair::from_facts(mid_facts, None)?);
        }
        if !left_facts.is_empty() {
            let condition = bare_core(&qa2.core);
            let piece = if parts.mid.is_empty() {
                QAPair::from_facts(left_facts, None)?
            } else {
                QAPair::from_facts(left_facts, Some(condition))?
            };
            parts.left.push(piece);
        }
        if !right_facts.is_empty() {
            let condition = bare_core(&qa1.core);
            let piece = if parts.mid.is_empty() {
                QAPair::from_facts(right_facts, None)?
            } else {
                QAPair::from_facts(right_facts, Some(condition))?
            };
            parts.right.push(piece);
        }
        Ok(parts)
    }

    fn probe_questions(&self, a: &Assertion, b: &Assertion) -> Result<Vec<String>> {
        let mut keys = Self::effective_keys(a)?;
        keys.extend(Self::effective_keys(b)?);
        Ok(keys.into_iter().map(|k| format!("what is the {k}?")).collect())
    }

    fn addresses_question(&self, a: &Assertion, question: &str) -> Result<bool> {
        let keys = Self::effective_keys(a)?;
        let key = question
            .trim()
            .trim_end_matches('?')
            .trim_start_matches("what is the ")
            .trim();
        Ok(keys.contains(key))
    }
}

/// Condition assertions are stored without their own conditions, which keeps
/// chains of "X | Y | Z" from accumulating across repeated decompositions.
fn bare_core(a: &Assertion) -> Assertion {
    Assertion { text: a.text.clone(), facts: a.facts.clone(), condition: None }
}
