//! Orthogonalization: turn a QA population into atomic, pairwise
//! non-overlapping QAs spanning the same information.
//!
//! Processing starts with an empty pool; each incoming QA is atomized against
//! every pooled QA, and pooled QAs are decomposed and replaced along the way.
//! `signature_partition` is the independent brute-force oracle the procedure
//! is tested against in fact-set mode.

use std::collections::{BTreeMap, BTreeSet};

use crate::algebra::distance_ratio;
use crate::error::{Error, Result};
use crate::model::{Mode, QAId, QAPair};
use crate::oracle::SemanticOracle;
use crate::rhetoric::TraceRelation;
use crate::scalar::exact_ratio;

/// Atomic, canonically ordered QAs with their provenance and rhetorical trace.
#[derive(Debug, Clone)]
pub struct OrthoSet {
    /// Atoms in canonical QAId order.
    pub atoms: Vec<QAPair>,
    /// Atom id → ids of the original QAs it was carved from.
    pub provenance: BTreeMap<QAId, BTreeSet<QAId>>,
    /// Trace restricted to atoms; empty until attached.
    pub trace: TraceRelation,
    /// Pairs that still overlap after the round budget (llm mode).
    pub unresolved: Vec<(QAId, QAId)>,
}

impl OrthoSet {
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atom_ids(&self) -> BTreeSet<QAId> {
        self.atoms.iter().map(|a| a.id.clone()).collect()
    }

    pub fn atom(&self, id: &QAId) -> Option<&QAPair> {
        self.atoms.iter().find(|a| &a.id == id)
    }

    /// Derives the atom trace from a base QA↔node trace: an atom inherits the
    /// union of its originals' node sets.
    pub fn attach_trace(&mut self, base: &TraceRelation) -> Result<()> {
        let mut trace = TraceRelation::new();
        for atom in &self.atoms {
            let originals = &self.provenance[&atom.id];
            let mut nodes = BTreeSet::new();
            for orig in originals {
                nodes.extend(base.nodes_of(orig));
            }
            if nodes.is_empty() {
                return Err(Error::BrokenTrace(format!(
                    "atom {} has no traceable origin",
                    atom.id.short()
                )));
            }
            for node in nodes {
                trace.add(atom.id.clone(), node);
            }
        }
        self.trace = trace;
        Ok(())
    }
}

struct Piece {
    qa: QAPair,
    provenance: BTreeSet<QAId>,
}

impl Piece {
    fn original(qa: QAPair) -> Self {
        let provenance = BTreeSet::from([qa.id.clone()]);
        Piece { qa, provenance }
    }

    fn is_empty(&self) -> bool {
        self.qa.facts().map(|f| f.is_empty()).unwrap_or(false)
    }
}

/// The iterative pairwise procedure. Input order is canonicalized first, so
/// the output is deterministic for any permutation of the same QA set.
pub fn orthogonalize(
    qas: &[QAPair],
    oracle: &dyn SemanticOracle,
    max_rounds: usize,
) -> Result<OrthoSet> {
    if qas.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut inputs: BTreeMap<QAId, QAPair> = BTreeMap::new();
    for qa in qas {
        inputs.entry(qa.id.clone()).or_insert_with(|| qa.clone());
    }
    let mut pool: Vec<Piece> = inputs.into_values().map(Piece::original).collect();
    let mut unresolved: Vec<(QAId, QAId)> = Vec::new();

    let rounds = max_rounds.max(1);
    let mut converged = false;
    for _ in 0..rounds {
        let (next, splits) = pass(pool, oracle, &mut unresolved)?;
        pool = next;
        if splits == 0 {
            converged = true;
            break;
        }
    }

    pool.retain(|p| !p.is_empty());

    // dedupe: exact fact-set identity (fact-set mode) or exact content id
    let mut by_key: BTreeMap<String, Piece> = BTreeMap::new();
    for piece in pool {
        let key = match piece.qa.facts() {
            Some(facts) => format!("{:?}", facts),
            None => piece.qa.id.to_string(),
        };
        match by_key.get_mut(&key) {
            Some(existing) => {
                existing.provenance.extend(piece.provenance);
                if piece.qa.id < existing.qa.id {
                    existing.qa = piece.qa;
                }
            }
            None => {
                by_key.insert(key, piece);
            }
        }
    }
    let mut pieces: Vec<Piece> = by_key.into_values().collect();
    pieces.sort_by(|a, b| a.qa.id.cmp(&b.qa.id));

    if !converged {
        // flag the pairs that still overlap; data, not an error
        for i in 0..pieces.len() {
            for j in (i + 1)..pieces.len() {
                if oracle.decompose_pair(&pieces[i].qa, &pieces[j].qa)?.has_overlap() {
                    unresolved.push((pieces[i].qa.id.clone(), pieces[j].qa.id.clone()));
                }
            }
        }
    } else if oracle.mode() == Mode::FactSet {
        // exact check: same-key pieces that decomposition could not separate
        for i in 0..pieces.len() {
            for j in (i + 1)..pieces.len() {
                let d = distance_ratio(&pieces[i].qa.core, &pieces[j].qa.core, oracle)?;
                if d != exact_ratio(1, 1) {
                    unresolved.push((pieces[i].qa.id.clone(), pieces[j].qa.id.clone()));
                }
            }
        }
    }
    unresolved.sort();
    unresolved.dedup();

    let mut atoms = Vec::with_capacity(pieces.len());
    let mut provenance = BTreeMap::new();
    for piece in pieces {
        provenance.insert(piece.qa.id.clone(), piece.provenance);
        atoms.push(piece.qa);
    }
    Ok(OrthoSet { atoms, provenance, trace: TraceRelation::new(), unresolved })
}

/// One full insertion pass; returns the new pool and the number of splits.
fn pass(
    incoming: Vec<Piece>,
    oracle: &dyn SemanticOracle,
    unresolved: &mut Vec<(QAId, QAId)>,
) -> Result<(Vec<Piece>, usize)> {
    let mut pool: Vec<Piece> = Vec::new();
    let mut splits = 0usize;
    for piece in incoming {
        // pieces of the incoming QA still to be scanned, with a resume index
        let mut work: Vec<(Piece, usize)> = vec![(piece, 0)];
        while let Some((mut current, mut j)) = work.pop() {
            if current.is_empty() {
                continue;
            }
            let mut absorbed = false;
            while j < pool.len() {
                let parts = match crate::algebra::decomp(&current.qa, &pool[j].qa, oracle) {
                    Ok(parts) => parts,
                    Err(Error::NonConvergent(_)) => {
                        // keep both sides and flag the pair unresolvable
                        unresolved.push((current.qa.id.clone(), pool[j].qa.id.clone()));
                        j += 1;
                        continue;
                    }
                    Err(other) => return Err(other),
                };
                if !parts.has_overlap() {
                    j += 1;
                    continue;
                }
                splits += 1;
                let pool_prov = pool[j].provenance.clone();
                let mut shared_prov = pool_prov.clone();
                shared_prov.extend(current.provenance.iter().cloned());

                // pool[j] is replaced by its shared and right-only pieces
                let mut replacement: Vec<Piece> = Vec::new();
                for qa in parts.mid {
                    replacement.push(Piece { qa, provenance: shared_prov.clone() });
                }
                for qa in parts.right {
                    replacement.push(Piece { qa, provenance: pool_prov.clone() });
                }
                replacement.retain(|p| !p.is_empty());
                let replaced = replacement.len();
                pool.splice(j..=j, replacement);
                let resume = j + replaced;

                // the incoming piece continues as its left-only remainder
                let mut lefts: Vec<Piece> = parts
                    .left
                    .into_iter()
                    .map(|qa| Piece { qa, provenance: current.provenance.clone() })
                    .filter(|p| !p.is_empty())
                    .collect();
                match lefts.len() {
                    0 => {
                        absorbed = true;
                        break;
                    }
                    _ => {
                        current = lefts.remove(0);
                        for extra in lefts {
                            work.push((extra, resume));
                        }
                        j = resume;
                    }
                }
            }
            if !absorbed && !current.is_empty() {
                pool.push(current);
            }
        }
    }
    Ok((pool, splits))
}

/// Violating pairs (distance < 1); empty iff the set is orthogonal.
pub fn verify_orthogonal(
    set: &OrthoSet,
    oracle: &dyn SemanticOracle,
) -> Result<Vec<(QAId, QAId)>> {
    let mut violations = Vec::new();
    for i in 0..set.atoms.len() {
        for j in (i + 1)..set.atoms.len() {
            let d = distance_ratio(&set.atoms[i].core, &set.atoms[j].core, oracle)?;
            if d != exact_ratio(1, 1) {
                violations.push((set.atoms[i].id.clone(), set.atoms[j].id.clone()));
            }
        }
    }
    Ok(violations)
}

/// Brute-force ground truth for fact-set corpora: every fact is grouped by
/// the exact subset of input QAs containing it; each distinct co-occurrence
/// class becomes one atom.
pub fn signature_partition(qas: &[QAPair]) -> Result<OrthoSet> {
    if qas.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut inputs: BTreeMap<QAId, QAPair> = BTreeMap::new();
    for qa in qas {
        inputs.entry(qa.id.clone()).or_insert_with(|| qa.clone());
    }
    // fact (key, values) → signature (set of containing QA ids)
    let mut signatures: BTreeMap<(String, Vec<String>), BTreeSet<QAId>> = BTreeMap::new();
    for (id, qa) in &inputs {
        let facts = qa
            .facts()
            .ok_or(Error::ModeMismatch { expected: "fact-set" })?;
        for (key, values) in facts.iter() {
            signatures
                .entry((key.clone(), values.iter().cloned().collect()))
                .or_default()
                .insert(id.clone());
        }
    }
    // signature class → facts
    let mut classes: BTreeMap<BTreeSet<QAId>, Vec<(String, Vec<String>)>> = BTreeMap::new();
    for (fact, sig) in signatures {
        classes.entry(sig).or_default().push(fact);
    }
    let mut atoms = Vec::new();
    let mut provenance = BTreeMap::new();
    for (sig, fact_list) in classes {
        let facts = crate::model::FactSet::from_facts(
            fact_list
                .into_iter()
                .map(|(k, vs)| crate::model::Fact::new(k, vs))
                .collect::<Result<Vec<_>>>()?,
        )?;
        let qa = QAPair::from_facts(facts, None)?;
        provenance.insert(qa.id.clone(), sig);
        atoms.push(qa);
    }
    atoms.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(OrthoSet { atoms, provenance, trace: TraceRelation::new(), unresolved: vec![] })
}
