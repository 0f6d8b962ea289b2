//! The thin category of QA equivalence classes with answerability morphisms.
//!
//! A morphism [QA1] → [QA2] exists iff core(QA2) can answer QA1 consistently.
//! Question answering is transitive, so reachability is the partial order;
//! mutual answerability collapses classes into one object.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::algebra::equiv;
use crate::error::{Error, Result};
use crate::model::{EquivClass, Mode, QAId, QAPair};
use crate::oracle::SemanticOracle;

/// Partial-order category over QA equivalence classes. Edges are stored
/// between representatives; the closure is derived on demand.
#[derive(Debug, Clone, Default)]
pub struct QACategory {
    qas: BTreeMap<QAId, QAPair>,
    /// union-find forest over QA ids; roots are class representatives
    parent: BTreeMap<QAId, QAId>,
    /// accepted morphisms between representatives (reduced on export)
    edges: BTreeSet<(QAId, QAId)>,
}

/// Heads and their chains: a head is a class that is not the source of any
/// non-trivial morphism; its chain is every class with a path into it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainReport {
    pub heads: BTreeSet<QAId>,
    pub chains: BTreeMap<QAId, BTreeSet<QAId>>,
}

impl QACategory {
    pub fn new() -> Self {
        QACategory::default()
    }

    pub fn object_count(&self) -> usize {
        self.representatives().len()
    }

    pub fn qa(&self, id: &QAId) -> Option<&QAPair> {
        self.qas.get(id)
    }

    pub fn contains(&self, id: &QAId) -> bool {
        self.qas.contains_key(id)
    }

    pub fn qa_ids(&self) -> impl Iterator<Item = &QAId> {
        self.qas.keys()
    }

    /// Representative of the class containing `id`. The minimum member id is
    /// kept as the root, so representatives are canonical.
    pub fn find(&self, id: &QAId) -> QAId {
        let mut current = id.clone();
        while let Some(p) = self.parent.get(&current) {
            if *p == current {
                break;
            }
            current = p.clone();
        }
        current
    }

    pub fn representatives(&self) -> BTreeSet<QAId> {
        self.qas.keys().map(|id| self.find(id)).collect()
    }

    pub fn objects(&self) -> Vec<EquivClass> {
        let mut classes: BTreeMap<QAId, BTreeSet<QAId>> = BTreeMap::new();
        for id in self.qas.keys() {
            classes.entry(self.find(id)).or_default().insert(id.clone());
        }
        classes
            .into_iter()
            .map(|(representative, members)| EquivClass { representative, members })
            .collect()
    }

    pub fn members_of(&self, rep: &QAId) -> BTreeSet<QAId> {
        let rep = self.find(rep);
        self.qas.keys().filter(|id| self.find(id) == rep).cloned().collect()
    }

    fn union_classes(&mut self, a: &QAId, b: &QAId) {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra == rb {
            return;
        }
        let (root, child) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent.insert(child.clone(), root.clone());
        // re-point edges at the surviving representative
        let edges = std::mem::take(&mut self.edges);
        for (s, d) in edges {
            let s = if s == child { root.clone() } else { s };
            let d = if d == child { root.clone() } else { d };
            if s != d {
                self.edges.insert((s, d));
            }
        }
    }

    /// Adds a QA: merged into an existing class when equivalent to its
    /// representative, otherwise a new isolated object.
    pub fn add_object(&mut self, qa: QAPair, oracle: &dyn SemanticOracle) -> Result<QAId> {
        if self.qas.contains_key(&qa.id) {
            return Ok(self.find(&qa.id));
        }
        let mut merge_target: Option<QAId> = None;
        for rep in self.representatives() {
            let rep_qa = self.qas[&rep].clone();
            if equiv(&qa, &rep_qa, oracle)? {
                merge_target = Some(rep);
                break;
            }
        }
        let id = qa.id.clone();
        self.parent.insert(id.clone(), id.clone());
        self.qas.insert(id.clone(), qa);
        if let Some(rep) = merge_target {
            self.union_classes(&id, &rep);
        }
        Ok(self.find(&id))
    }

    /// Records a morphism src → dst after the oracle confirms that dst's core
    /// answers src consistently. A reverse path collapses the classes.
    pub fn add_morphism(
        &mut self,
        src: &QAId,
        dst: &QAId,
        oracle: &dyn SemanticOracle,
    ) -> Result<()> {
        let src_qa = self
            .qas
            .get(src)
            .ok_or_else(|| Error::UnknownNode(src.to_string()))?
            .clone();
        let dst_qa = self
            .qas
            .get(dst)
            .ok_or_else(|| Error::UnknownNode(dst.to_string()))?
            .clone();
        let verdict = oracle.answers(&dst_qa.core, &src_qa)?;
        if !(verdict.addressable && verdict.consistent) {
            return Err(Error::NotAnswerable {
                src: src_qa.id.short().to_string(),
                dst: dst_qa.id.short().to_string(),
            });
        }
        let rs = self.find(src);
        let rd = self.find(dst);
        if rs == rd {
            return Ok(()); // identity morphism, implicit
        }
        self.edges.insert((rs, rd));
        self.collapse_cycles();
        Ok(())
    }

    /// Merges every strongly-connected component into a single class;
    /// antisymmetry up to isomorphism.
    fn collapse_cycles(&mut self) {
        loop {
            let closure = self.closure();
            let mut to_merge: Option<(QAId, QAId)> = None;
            'outer: for (a, reach) in &closure {
                for b in reach {
                    if b != a && closure.get(b).map(|r| r.contains(a)).unwrap_or(false) {
                        to_merge = Some((a.clone(), b.clone()));
                        break 'outer;
                    }
                }
            }
            match to_merge {
                Some((a, b)) => self.union_classes(&a, &b),
                None => break,
            }
        }
    }

    /// Transitive closure over representatives: rep → set of reps reachable
    /// through one or more morphisms.
    pub fn closure(&self) -> BTreeMap<QAId, BTreeSet<QAId>> {
        let mut adjacency: BTreeMap<QAId, BTreeSet<QAId>> = BTreeMap::new();
        for (s, d) in &self.edges {
            let (s, d) = (self.find(s), self.find(d));
            if s != d {
                adjacency.entry(s).or_default().insert(d);
            }
        }
        let mut result = BTreeMap::new();
        for rep in self.representatives() {
            let mut reach = BTreeSet::new();
            let mut queue: VecDeque<QAId> = adjacency.get(&rep).cloned().unwrap_or_default().into_iter().collect();
            while let Some(next) = queue.pop_front() {
                if reach.insert(next.clone()) {
                    if let Some(more) = adjacency.get(&next) {
                        queue.extend(more.iter().cloned());
                    }
                }
            }
            result.insert(rep, reach);
        }
        result
    }

    /// Direct morphism edges (between representatives, unreduced).
    pub fn edges(&self) -> BTreeSet<(QAId, QAId)> {
        self.edges
            .iter()
            .map(|(s, d)| (self.find(s), self.find(d)))
            .filter(|(s, d)| s != d)
            .collect()
    }

    /// Transitive reduction: the minimal edge set with the same closure;
    /// canonical for rendering and goldens.
    pub fn reduction(&self) -> BTreeSet<(QAId, QAId)> {
        let closure = self.closure();
        self.edges()
            .into_iter()
            .filter(|(s, d)| {
                // drop s→d when some intermediate m has s→m and m→d
                !closure[s]
                    .iter()
                    .any(|m| m != s && m != d && closure[m].contains(d))
            })
            .collect()
    }

    /// In fact-set mode every ordered pair is verified exactly, completing
    /// the thin partial order.
    pub fn complete_factset_morphisms(&mut self, oracle: &dyn SemanticOracle) -> Result<()> {
        debug_assert!(oracle.mode() == Mode::FactSet);
        let reps: Vec<QAId> = self.representatives().into_iter().collect();
        for src in &reps {
            for dst in &reps {
                if src == dst {
                    continue;
                }
                let (rs, rd) = (self.find(src), self.find(dst));
                if rs == rd {
                    continue;
                }
                let src_qa = &self.qas[&rs];
                let dst_qa = &self.qas[&rd];
                let verdict = oracle.answers(&dst_qa.core, src_qa)?;
                if verdict.addressable && verdict.consistent {
                    self.edges.insert((rs, rd));
                }
            }
        }
        self.collapse_cycles();
        Ok(())
    }

    /// Heads (maximal classes) and the chain flowing into each head.
    pub fn chain_report(&self) -> ChainReport {
        let closure = self.closure();
        let heads: BTreeSet<QAId> = closure
            .iter()
            .filter(|(_, reach)| reach.is_empty())
            .map(|(rep, _)| rep.clone())
            .collect();
        let mut chains: BTreeMap<QAId, BTreeSet<QAId>> = BTreeMap::new();
        for head in &heads {
            let mut members: BTreeSet<QAId> = closure
                .iter()
                .filter(|(_, reach)| reach.contains(head))
                .map(|(rep, _)| rep.clone())
                .collect();
            members.insert(head.clone());
            chains.insert(head.clone(), members);
        }
        ChainReport { heads, chains }
    }

    /// Edge-list dump of the transitive reduction, one "src -> dst" per line.
    pub fn export_edge_list(&self) -> String {
        let mut out = String::new();
        for (s, d) in self.reduction() {
            out.push_str(&format!("{s} -> {d}\n"));
        }
        out
    }

    pub fn export_dot(&self) -> String {
        let mut out = String::from("digraph qa_category {\n");
        for rep in self.representatives() {
            let label = self.qas[&rep].core.display_text().replace('"', "'");
            out.push_str(&format!("  \"{}\" [label=\"{}\"];\n", rep.short(), label));
        }
        for (s, d) in self.reduction() {
            out.push_str(&format!("  \"{}\" -> \"{}\";\n", s.short(), d.short()));
        }
        out.push_str("}\n");
        out
    }
}

/// Merge two categories: pairwise isomorphism detection across the object
/// sets, morphisms carried over and re-closed.
pub fn merge_categories(
    c1: &QACategory,
    c2: &QACategory,
    oracle: &dyn SemanticOracle,
) -> Result<QACategory> {
    let mut merged = c1.clone();
    for qa in c2.qas.values() {
        merged.add_object(qa.clone(), oracle)?;
    }
    for (s, d) in c2.edges() {
        let (rs, rd) = (merged.find(&s), merged.find(&d));
        if rs != rd {
            merged.edges.insert((rs, rd));
        }
    }
    merged.collapse_cycles();
    if oracle.mode() == Mode::FactSet {
        merged.complete_factset_morphisms(oracle)?;
    }
    Ok(merged)
}
