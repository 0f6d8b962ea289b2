//! Operations on QA pairs: union, intersection/complement via decomposition,
//! and the Jaccard metric between assertions and between documents.

use crate::error::{Error, Result};
use crate::model::{list_join, Assertion, FactSet, Mode, QAPair};
use crate::oracle::SemanticOracle;
use crate::scalar::{exact_ratio, ExactRatio, Real};

/// decomp(QA1, QA2) = (QA1 − QA2, QA1 ∩ QA2, QA2 − QA1). The union of all
/// three components is equivalent to the union of the original pair.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DecompTriple {
    pub left: Vec<QAPair>,
    pub mid: Vec<QAPair>,
    pub right: Vec<QAPair>,
}

impl DecompTriple {
    pub fn pieces(&self) -> impl Iterator<Item = &QAPair> {
        self.left.iter().chain(self.mid.iter()).chain(self.right.iter())
    }

    pub fn has_overlap(&self) -> bool {
        !self.mid.is_empty()
    }
}

/// Two QAs are equivalent when they answer exactly the same questions,
/// i.e. their distance is zero.
pub fn equiv(qa1: &QAPair, qa2: &QAPair, oracle: &dyn SemanticOracle) -> Result<bool> {
    Ok(distance_ratio(&qa1.core, &qa2.core, oracle)? == exact_ratio(0, 1))
}

/// Exact metric: 1 − |Q(a) ∩ Q(b)| / |Q(a) ∪ Q(b)| over the canonical
/// question universe. Two empty assertions are at distance zero.
pub fn distance_ratio(
    a: &Assertion,
    b: &Assertion,
    oracle: &dyn SemanticOracle,
) -> Result<ExactRatio> {
    let (inter, union) = match oracle.mode() {
        Mode::FactSet => {
            let ka = oracle.question_keys(a)?;
            let kb = oracle.question_keys(b)?;
            let inter = ka.intersection(&kb).count() as u64;
            let union = ka.union(&kb).count() as u64;
            (inter, union)
        }
        Mode::Llm => {
            // symmetric probe panel generated once from the pair
            let probes = oracle.probe_questions(a, b)?;
            let mut inter = 0u64;
            let mut union = 0u64;
            for probe in &probes {
                let in_a = oracle.addresses_question(a, probe)?;
                let in_b = oracle.addresses_question(b, probe)?;
                if in_a && in_b {
                    inter += 1;
                }
                if in_a || in_b {
                    union += 1;
                }
            }
            (inter, union)
        }
    };
    if union == 0 {
        return Ok(exact_ratio(0, 1));
    }
    Ok(exact_ratio(1, 1) - exact_ratio(inter, union))
}

/// Metric as a floating scalar in [0, 1].
pub fn distance<R: Real>(a: &Assertion, b: &Assertion, oracle: &dyn SemanticOracle) -> Result<R> {
    let ratio = distance_ratio(a, b, oracle)?;
    Ok(crate::scalar::to_real::<R>(*ratio.numer()) / crate::scalar::to_real::<R>(*ratio.denom()))
}

/// Union of two QA pairs: consistent cores conjoin with "and"; inconsistent
/// cores isolate each conflicting key as a disjunctive-valued fact. The fact
/// payload is always the key-wise merge with value-set union on shared keys.
pub fn union(qa1: &QAPair, qa2: &QAPair, oracle: &dyn SemanticOracle) -> Result<QAPair> {
    match (qa1.facts(), qa2.facts()) {
        (Some(f1), Some(f2)) => {
            let merged = f1.merge_union(f2);
            if oracle.consistent(&qa1.core, &qa2.core)? {
                let question = format!(
                    "{} and {}?",
                    qa1.question.trim_end_matches('?'),
                    qa2.question.trim_end_matches('?')
                );
                let answer = format!("{} and {}, respectively", qa1.answer, qa2.answer);
                let text = format!("{} and {}", qa1.core.text, qa2.core.text);
                let core = Assertion::new(text, Some(merged))?;
                Ok(QAPair::new(question, answer, core))
            } else {
                // present left-only keys, then right-only, then the conflicts
                let conflicts = f1.conflicting_keys(f2);
                let mut ordered: Vec<String> = f1
                    .keys()
                    .filter(|k| !conflicts.iter().any(|c| c == k))
                    .map(str::to_string)
                    .collect();
                ordered.extend(
                    f2.keys()
                        .filter(|k| !f1.contains_key(k))
                        .map(str::to_string),
                );
                ordered.extend(conflicts.iter().cloned());
                let questions: Vec<String> =
                    ordered.iter().map(|k| format!("what is the {k}")).collect();
                let answers: Vec<String> = ordered
                    .iter()
                    .map(|k| {
                        merged
                            .values_of(k)
                            .map(|v| v.iter().cloned().collect::<Vec<_>>().join(" or "))
                            .unwrap_or_default()
                    })
                    .collect();
                let question = format!("{}?", list_join(&questions));
                let answer = format!("{}, respectively", list_join(&answers));
                let core = Assertion::new(crate::model::render_statement(&merged), Some(merged))?;
                Ok(QAPair::new(question, answer, core))
            }
        }
        _ => {
            // llm mode: conjoin texts; the disjunctive rewording of an
            // inconsistent pair is delegated to the oracle's judgement
            let consistent = oracle.consistent(&qa1.core, &qa2.core)?;
            let joiner = if consistent { "and" } else { "or (inconsistently)" };
            let question = format!(
                "{} {joiner} {}?",
                qa1.question.trim_end_matches('?'),
                qa2.question.trim_end_matches('?')
            );
            let answer = format!("{} {joiner} {}", qa1.answer, qa2.answer);
            let text = format!("{} {joiner} {}", qa1.core.text, qa2.core.text);
            Ok(QAPair::new(question, answer, Assertion::new(text, None)?))
        }
    }
}

/// Union folded over a list of QAs; errors on empty input.
pub fn union_all(qas: &[QAPair], oracle: &dyn SemanticOracle) -> Result<QAPair> {
    let mut iter = qas.iter();
    let first = iter.next().ok_or(Error::EmptyInput)?.clone();
    iter.try_fold(first, |acc, qa| union(&acc, qa, oracle))
}

const DECOMP_RETRY_BUDGET: usize = 3;

/// Decompose a pair of QAs and validate the conservation round-trip: the
/// union of all pieces must equal the union of the originals.
pub fn decomp(qa1: &QAPair, qa2: &QAPair, oracle: &dyn SemanticOracle) -> Result<DecompTriple> {
    let mut last_err = String::new();
    for _ in 0..DECOMP_RETRY_BUDGET {
        let parts = oracle.decompose_pair(qa1, qa2)?;
        let triple = DecompTriple { left: parts.left, mid: parts.mid, right: parts.right };
        if !triple.has_overlap() {
            // no overlap: the originals are already the decomposition
            return Ok(DecompTriple {
                left: vec![qa1.clone()],
                mid: vec![],
                right: vec![qa2.clone()],
            });
        }
        match validate_conservation(qa1, qa2, &triple, oracle)? {
            true => return Ok(triple),
            false => last_err = "decomposition does not conserve the pair's information".into(),
        }
        if oracle.mode() == Mode::FactSet {
            break; // deterministic oracle will not change its answer
        }
    }
    Err(Error::NonConvergent(format!(
        "{last_err} ({} vs {})",
        qa1.id.short(),
        qa2.id.short()
    )))
}

fn validate_conservation(
    qa1: &QAPair,
    qa2: &QAPair,
    triple: &DecompTriple,
    oracle: &dyn SemanticOracle,
) -> Result<bool> {
    match (qa1.facts(), qa2.facts()) {
        (Some(f1), Some(f2)) => {
            // exact: left ∪ mid = facts(qa1) and mid ∪ right = facts(qa2)
            let side = |pieces: &[QAPair]| -> FactSet {
                pieces.iter().fold(FactSet::new(), |acc, p| {
                    p.facts().map(|f| acc.merge_union(f)).unwrap_or(acc)
                })
            };
            let mid = side(&triple.mid);
            let left_side = side(&triple.left).merge_union(&mid);
            let right_side = mid.merge_union(&side(&triple.right));
            Ok(left_side == *f1 && right_side == *f2)
        }
        _ => {
            // llm mode: oracle equivalence verdict on the recomposed union
            let pieces: Vec<QAPair> = triple.pieces().cloned().collect();
            let recomposed = union_all(&pieces, oracle)?;
            let original = union(qa1, qa2, oracle)?;
            equiv(&recomposed, &original, oracle)
        }
    }
}

/// Metric between two processed documents: the Jaccard distance over the
/// atoms of their merged, orthogonalized category.
pub fn doc_distance<R: Real>(pair: &crate::pipeline::MergedPair) -> R {
    pair.doc_distance()
}
