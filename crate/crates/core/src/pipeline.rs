//! End-to-end processing: raw document → abstractive DAG → DAG of core QAs →
//! category of QAs → orthogonalized QAs, with the trace relation maintained
//! at every stage.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::category::{merge_categories, QACategory};
use crate::error::{Error, Result};
use crate::model::{Assertion, Document, FactSet, Mode, QAId, QAPair};
use crate::oracle::SemanticOracle;
use crate::ortho::{orthogonalize, OrthoSet};
use crate::rhetoric::{
    build_abstractive_dag, to_core_qa_dag, AbstractiveDag, CoreQADag, NodeId, SyntheticDocument,
    TraceRelation,
};
use crate::scalar::{ratio_to_real, Real};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub mode: Mode,
    pub fanout_limit: usize,
    pub max_rounds: usize,
    pub lattice_limit: usize,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            mode: Mode::FactSet,
            fanout_limit: 5,
            max_rounds: 3,
            lattice_limit: 4096,
            seed: 0,
        }
    }
}

/// A fully processed document: every pipeline artifact, immutable once built.
#[derive(Debug, Clone)]
pub struct DocumentContext {
    pub document: Document,
    pub dag: AbstractiveDag,
    pub core_dag: CoreQADag,
    /// Core QAs plus their sub-statement decompositions.
    pub population: Vec<QAPair>,
    /// QA ↔ node trace over the whole population and atom set.
    pub trace: TraceRelation,
    pub category: QACategory,
    pub ortho: OrthoSet,
    /// The synthetic annotation this context was built from, when fact-set.
    pub synthetic: Option<SyntheticDocument>,
}

impl DocumentContext {
    /// Processes an annotated fact-set document.
    pub fn from_synthetic(
        synth: &SyntheticDocument,
        config: &PipelineConfig,
        oracle: &dyn SemanticOracle,
    ) -> Result<Self> {
        let document = synth.to_document();
        let dag = synth.to_dag()?;
        let mut ctx = Self::build_from_parts(document, dag, config, oracle)?;
        ctx.synthetic = Some(synth.clone());
        Ok(ctx)
    }

    /// Processes a raw text document through the llm oracle.
    pub fn from_text(
        id: &str,
        text: &str,
        config: &PipelineConfig,
        oracle: &dyn SemanticOracle,
    ) -> Result<Self> {
        let document = Document::new(id, text, Mode::Llm);
        let dag = build_abstractive_dag(&document, oracle, config.fanout_limit)?;
        Self::build_from_parts(document, dag, config, oracle)
    }

    pub(crate) fn build_from_parts(
        document: Document,
        dag: AbstractiveDag,
        config: &PipelineConfig,
        oracle: &dyn SemanticOracle,
    ) -> Result<Self> {
        let core_dag = to_core_qa_dag(&dag, oracle)?;
        let mut trace = crate::rhetoric::trace(&core_dag)?;

        // population: core QAs plus their sub-statement decompositions; in
        // fact-set mode a compound node QA decomposes into one sub-QA per fact
        let mut population: Vec<QAPair> = Vec::new();
        for (node, qas) in &core_dag.core_qas {
            for qa in qas {
                population.push(qa.clone());
                if oracle.mode() == Mode::FactSet {
                    let facts = qa.facts().expect("fact-set QA");
                    if facts.len() > 1 {
                        for fact in facts.facts() {
                            let sub = QAPair::from_facts(
                                FactSet::from_facts([fact])?,
                                None,
                            )?;
                            trace.add(sub.id.clone(), node.clone());
                            population.push(sub);
                        }
                    }
                }
            }
        }
        population.sort_by(|a, b| a.id.cmp(&b.id));
        population.dedup_by(|a, b| a.id == b.id);

        // the category over the population
        let mut category = QACategory::new();
        for qa in &population {
            category.add_object(qa.clone(), oracle)?;
        }
        match oracle.mode() {
            Mode::FactSet => category.complete_factset_morphisms(oracle)?,
            Mode::Llm => {
                // structural candidates: QAs of a node against QAs of its
                // parent node, both directions, oracle-verified
                propose_adjacent_morphisms(&mut category, &core_dag, oracle)?;
            }
        }

        // orthogonalize the population and fold the atoms back in
        let mut ortho = orthogonalize(&population, oracle, config.max_rounds)?;
        ortho.attach_trace(&trace)?;
        for atom in ortho.atoms.clone() {
            let rep = category.add_object(atom.clone(), oracle)?;
            if oracle.mode() == Mode::Llm {
                // decomposition parentage: atom → each QA it was carved from
                for orig in &ortho.provenance[&atom.id] {
                    let orig_rep = category.find(orig);
                    if orig_rep != rep {
                        let _ = category.add_morphism(&rep, &orig_rep, oracle);
                    }
                }
            }
        }
        if oracle.mode() == Mode::FactSet {
            category.complete_factset_morphisms(oracle)?;
        }
        for (qa, node) in &ortho.trace.pairs {
            trace.add(qa.clone(), node.clone());
        }

        // every category QA traces somewhere, every node carries some QA
        let qa_ids: BTreeSet<QAId> = category.qa_ids().cloned().collect();
        let node_ids: BTreeSet<NodeId> = dag.nodes.keys().cloned().collect();
        trace.verify(&qa_ids, &node_ids)?;

        Ok(DocumentContext {
            document,
            dag,
            core_dag,
            population,
            trace,
            category,
            ortho,
            synthetic: None,
        })
    }

    pub fn atoms(&self) -> &[QAPair] {
        &self.ortho.atoms
    }

    pub fn atom_ids(&self) -> BTreeSet<QAId> {
        self.ortho.atom_ids()
    }

    /// Atoms tracing to any of the given nodes.
    pub fn atoms_of_nodes(&self, nodes: &BTreeSet<NodeId>) -> BTreeSet<QAId> {
        self.ortho
            .trace
            .pairs
            .iter()
            .filter(|(_, n)| nodes.contains(n))
            .map(|(qa, _)| qa.clone())
            .collect()
    }

    /// The whole document as a single assertion; in fact-set mode it carries
    /// the key-wise union of all core facts.
    pub fn document_assertion(&self) -> Result<Assertion> {
        let facts = match self.document.mode {
            Mode::FactSet => {
                let mut merged = FactSet::new();
                for qas in self.core_dag.core_qas.values() {
                    for qa in qas {
                        if let Some(f) = qa.facts() {
                            merged = merged.merge_union(f);
                        }
                    }
                }
                Some(merged)
            }
            Mode::Llm => None,
        };
        Assertion::new(&self.document.raw_text, facts)
    }

    /// Per-node rendering of the orthogonalized QAs: the node's original
    /// assertion followed by the atoms tracing to it.
    pub fn render_ortho_by_node(&self) -> String {
        let mut out = String::new();
        for node_id in self.dag.document_order() {
            let node = &self.dag.nodes[&node_id];
            out.push_str(&format!("[{}] {}\n", node_id, node.assertion.display_text()));
            for atom in &self.ortho.atoms {
                if self.ortho.trace.pairs.contains(&(atom.id.clone(), node_id.clone())) {
                    out.push_str(&format!("  - {}\n", atom.core.display_text()));
                }
            }
        }
        out
    }
}

fn propose_adjacent_morphisms(
    category: &mut QACategory,
    core_dag: &CoreQADag,
    oracle: &dyn SemanticOracle,
) -> Result<()> {
    for (node, qas) in &core_dag.core_qas {
        for parent in &core_dag.dag.nodes[node].parents {
            let parent_qas = &core_dag.core_qas[parent];
            for qa in qas {
                for pqa in parent_qas {
                    // either direction may hold; NotAnswerable just skips
                    match category.add_morphism(&qa.id, &pqa.id, oracle) {
                        Ok(()) | Err(Error::NotAnswerable { .. }) => {}
                        Err(other) => return Err(other),
                    }
                    match category.add_morphism(&pqa.id, &qa.id, oracle) {
                        Ok(()) | Err(Error::NotAnswerable { .. }) => {}
                        Err(other) => return Err(other),
                    }
                }
            }
        }
    }
    Ok(())
}

/// Two documents merged into one category and re-orthogonalized; the carrier
/// of every inter-document measure.
#[derive(Debug, Clone)]
pub struct MergedPair {
    pub category: QACategory,
    pub atoms: Vec<QAPair>,
    /// Per-atom attribution: answerable consistently from (first, second).
    pub attribution: BTreeMap<QAId, (bool, bool)>,
    pub ic_first: u64,
    pub ic_second: u64,
}

impl MergedPair {
    pub fn shared(&self) -> u64 {
        self.attribution.values().filter(|(a, b)| *a && *b).count() as u64
    }

    pub fn total(&self) -> u64 {
        self.atoms.len() as u64
    }

    /// Number of merged atoms in common: the mutual information.
    pub fn mutual_information(&self) -> u64 {
        self.shared()
    }

    /// IG(D2; D1) = IC(D2) − IC(D1, D2).
    pub fn information_gain_second_given_first(&self) -> u64 {
        self.ic_second.saturating_sub(self.mutual_information())
    }

    pub fn information_gain_first_given_second(&self) -> u64 {
        self.ic_first.saturating_sub(self.mutual_information())
    }

    /// 1 − shared / total over the merged, orthogonalized category.
    pub fn doc_distance<R: Real>(&self) -> R {
        let total = self.total();
        if total == 0 {
            return R::zero();
        }
        ratio_to_real::<R>(total - self.shared(), total)
    }
}

/// Merges two processed documents: categories merged with isomorphism
/// detection, populations re-orthogonalized, atoms attributed by consistent
/// answerability from each document.
pub fn merge_pair(
    first: &DocumentContext,
    second: &DocumentContext,
    config: &PipelineConfig,
    oracle: &dyn SemanticOracle,
) -> Result<MergedPair> {
    let category = merge_categories(&first.category, &second.category, oracle)?;
    let mut population: Vec<QAPair> = first.population.clone();
    population.extend(second.population.iter().cloned());
    population.sort_by(|a, b| a.id.cmp(&b.id));
    population.dedup_by(|a, b| a.id == b.id);

    let ortho = orthogonalize(&population, oracle, config.max_rounds)?;
    let a_first = first.document_assertion()?;
    let a_second = second.document_assertion()?;
    let mut attribution = BTreeMap::new();
    for atom in &ortho.atoms {
        let in_first = oracle.answers(&a_first, atom)?.consistent;
        let in_second = oracle.answers(&a_second, atom)?.consistent;
        attribution.insert(atom.id.clone(), (in_first, in_second));
    }
    Ok(MergedPair {
        category,
        atoms: ortho.atoms,
        attribution,
        ic_first: first.atoms().len() as u64,
        ic_second: second.atoms().len() as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::FactSetOracle;

    pub(crate) const ABC_JSON: &str = r#"{
        "id": "abc",
        "text": "The policy takes effect in March. Employees welcomed the change.",
        "nodes": [
            {"id": "A", "text": "The committee announced a new policy.",
             "facts": [{"key": "policy-announced", "values": ["yes"]}],
             "children": ["B", "C"]},
            {"id": "B", "text": "The policy takes effect in March.",
             "facts": [{"key": "policy-takes-effect", "values": ["yes"]},
                        {"key": "policy-effective-month", "values": ["march"]}],
             "children": []},
            {"id": "C", "text": "Employees welcomed the change.",
             "facts": [{"key": "employees-welcomed", "values": ["yes"]}],
             "children": []}
        ],
        "root": "A"
    }"#;

    fn abc_context() -> DocumentContext {
        let synth = SyntheticDocument::from_json(ABC_JSON).unwrap();
        DocumentContext::from_synthetic(&synth, &PipelineConfig::default(), &FactSetOracle::new())
            .unwrap()
    }

    fn doc_from_fact_lists(id: &str, lists: &[&[&str]]) -> DocumentContext {
        let mut nodes = vec![];
        let mut texts = vec![];
        for (i, facts) in lists.iter().enumerate() {
            let text = format!("Node {i} states {}.", facts.join(" and "));
            texts.push(text.clone());
            nodes.push(serde_json::json!({
                "id": format!("n{i}"),
                "text": text,
                "facts": facts.iter().map(|k| serde_json::json!({"key": k, "values": [format!("v-{k}")]})).collect::<Vec<_>>(),
                "children": [],
            }));
        }
        let children: Vec<String> = (0..lists.len()).map(|i| format!("n{i}")).collect();
        let mut all_nodes = vec![serde_json::json!({
            "id": "root",
            "text": "Root summary.",
            "facts": [],
            "children": children,
        })];
        all_nodes.extend(nodes);
        let synth = serde_json::json!({
            "id": id,
            "text": texts.join(" "),
            "nodes": all_nodes,
            "root": "root",
        });
        let synth = SyntheticDocument::from_json(&synth.to_string()).unwrap();
        DocumentContext::from_synthetic(&synth, &PipelineConfig::default(), &FactSetOracle::new())
            .unwrap()
    }

    #[test]
    fn abc_has_four_atoms_and_three_heads() {
        let ctx = abc_context();
        assert_eq!(ctx.atoms().len(), 4);
        let report = ctx.category.chain_report();
        assert_eq!(report.heads.len(), 3);
    }

    #[test]
    fn abc_atom_trace_is_per_node() {
        let ctx = abc_context();
        for atom in ctx.atoms() {
            assert_eq!(ctx.ortho.trace.nodes_of(&atom.id).len(), 1);
        }
        let b_atoms = ctx.atoms_of_nodes(&BTreeSet::from([NodeId::new("B")]));
        assert_eq!(b_atoms.len(), 2);
    }

    #[test]
    fn merged_pair_attribution_matches_fact_overlap() {
        let config = PipelineConfig::default();
        let oracle = FactSetOracle::new();
        let d1 = doc_from_fact_lists("d1", &[&["f1", "f2"]]);
        let d2 = doc_from_fact_lists("d2", &[&["f2", "f3"]]);
        let pair = merge_pair(&d1, &d2, &config, &oracle).unwrap();
        assert_eq!(pair.total(), 3);
        assert_eq!(pair.mutual_information(), 1);
        assert_eq!(pair.doc_distance::<f64>(), 2.0 / 3.0);
        assert_eq!(pair.information_gain_second_given_first(), 1);
    }

    #[test]
    fn identical_documents_are_at_distance_zero() {
        let config = PipelineConfig::default();
        let oracle = FactSetOracle::new();
        let d1 = doc_from_fact_lists("d1", &[&["f1", "f2"]]);
        let d2 = doc_from_fact_lists("d2", &[&["f1", "f2"]]);
        let pair = merge_pair(&d1, &d2, &config, &oracle).unwrap();
        assert_eq!(pair.doc_distance::<f64>(), 0.0);
        assert_eq!(pair.information_gain_second_given_first(), 0);
    }

    #[test]
    fn disjoint_documents_are_at_distance_one() {
        let config = PipelineConfig::default();
        let oracle = FactSetOracle::new();
        let d1 = doc_from_fact_lists("d1", &[&["f1"]]);
        let d2 = doc_from_fact_lists("d2", &[&["g1"]]);
        let pair = merge_pair(&d1, &d2, &config, &oracle).unwrap();
        assert_eq!(pair.doc_distance::<f64>(), 1.0);
        assert_eq!(pair.mutual_information(), 0);
    }
}
