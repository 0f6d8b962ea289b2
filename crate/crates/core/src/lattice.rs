//! Selections over document content, the summarization lattice, suppression
//! and exegesis, and the four summary/extension types with their
//! factorizations.
//!
//! "Chain" for summary classification comes from the category's chain report,
//! not the abstractive DAG: summaries classify by which chains of information
//! they keep, trim, or drop.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::algebra::distance_ratio;
use crate::error::{Error, Result};
use crate::model::{Assertion, Fact, FactSet, Mode, QAId};
use crate::oracle::{SemanticOracle, TextSpan};
use crate::pipeline::{DocumentContext, PipelineConfig};
use crate::rhetoric::{AbstractiveDag, DagNode, NodeId};
use crate::scalar::exact_ratio;

/// A set of retained DAG nodes; via the trace, equivalently a set of atoms.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Selection {
    pub kept: BTreeSet<NodeId>,
}

impl Selection {
    pub fn new(kept: impl IntoIterator<Item = NodeId>) -> Self {
        Selection { kept: kept.into_iter().collect() }
    }

    pub fn empty() -> Self {
        Selection::default()
    }

    pub fn full(dag: &AbstractiveDag) -> Self {
        Selection { kept: dag.nodes.keys().cloned().collect() }
    }

    fn validate(&self, dag: &AbstractiveDag) -> Result<()> {
        for id in &self.kept {
            if !dag.nodes.contains_key(id) {
                return Err(Error::UnknownNode(id.to_string()));
            }
        }
        Ok(())
    }
}

/// Meet is set intersection: the content both summaries retain.
pub fn meet(s1: &Selection, s2: &Selection) -> Selection {
    Selection { kept: s1.kept.intersection(&s2.kept).cloned().collect() }
}

/// Join is set union: the union of two summaries is also a summary.
pub fn join(s1: &Selection, s2: &Selection) -> Selection {
    Selection { kept: s1.kept.union(&s2.kept).cloned().collect() }
}

/// Hierarchical: ancestor-closed, i.e. nothing higher in the rhetorical
/// structure is suppressed before anything lower.
pub fn is_hierarchical(sel: &Selection, dag: &AbstractiveDag) -> Result<bool> {
    sel.validate(dag)?;
    for id in &sel.kept {
        for parent in &dag.nodes[id].parents {
            if !sel.kept.contains(parent) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// The virtual powerset lattice over DAG nodes, materialized only on demand.
pub struct SummarizationLattice<'a> {
    dag: &'a AbstractiveDag,
    limit: usize,
}

impl<'a> SummarizationLattice<'a> {
    pub fn new(dag: &'a AbstractiveDag, limit: usize) -> Self {
        SummarizationLattice { dag, limit }
    }

    pub fn bottom(&self) -> Selection {
        Selection::empty()
    }

    pub fn top(&self) -> Selection {
        Selection::full(self.dag)
    }

    pub fn is_hierarchical(&self, sel: &Selection) -> Result<bool> {
        is_hierarchical(sel, self.dag)
    }

    pub fn enumerate_hierarchical(&self) -> Result<Vec<Selection>> {
        enumerate_hierarchical(self.dag, self.limit)
    }
}

/// All ancestor-closed selections, canonically ordered by (size, node ids);
/// errors when more than `limit` exist.
pub fn enumerate_hierarchical(dag: &AbstractiveDag, limit: usize) -> Result<Vec<Selection>> {
    // topological order, parents first
    let order = dag.document_order();
    let mut results: Vec<BTreeSet<NodeId>> = vec![BTreeSet::new()];
    for id in &order {
        let parents = &dag.nodes[id].parents;
        let mut next = Vec::with_capacity(results.len() * 2);
        for kept in results {
            if parents.iter().all(|p| kept.contains(p)) {
                let mut with = kept.clone();
                with.insert(id.clone());
                next.push(with);
            }
            next.push(kept);
            if next.len() > limit {
                return Err(Error::TooLarge(next.len()));
            }
        }
        results = next;
    }
    let mut selections: Vec<Selection> = results.into_iter().map(|kept| Selection { kept }).collect();
    selections.sort_by_key(|s| (s.kept.len(), s.kept.iter().cloned().collect::<Vec<_>>()));
    Ok(selections)
}

/// A suppressed document: the retained selection, its atoms, and the summary
/// text. The inclusion back into the original is the identity on `atoms`.
#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub selection: Selection,
    pub atoms: BTreeSet<QAId>,
    pub text: String,
    #[serde(skip)]
    pub assertion: Assertion,
}

/// Suppress everything outside the selection. Non-hierarchical selections
/// are meaningful lattice members but need the explicit override.
pub fn suppress(
    ctx: &DocumentContext,
    sel: &Selection,
    allow_non_hierarchical: bool,
) -> Result<Summary> {
    if !is_hierarchical(sel, &ctx.dag)? && !allow_non_hierarchical {
        return Err(Error::NonHierarchical);
    }
    let atoms = ctx.atoms_of_nodes(&sel.kept);
    let text = ctx
        .dag
        .document_order()
        .into_iter()
        .filter(|id| sel.kept.contains(id))
        .map(|id| ctx.dag.nodes[&id].assertion.text.clone())
        .collect::<Vec<_>>()
        .join(" ");
    let facts = match ctx.document.mode {
        Mode::FactSet => {
            let mut merged = FactSet::new();
            for id in &sel.kept {
                if let Some(f) = &ctx.dag.nodes[id].assertion.facts {
                    merged = merged.merge_union(f);
                }
            }
            Some(merged)
        }
        Mode::Llm => None,
    };
    let assertion = Assertion::new(if text.is_empty() { "(empty summary)" } else { &text }, facts)?;
    Ok(Summary { selection: sel.clone(), atoms, text, assertion })
}

/// The summary as a relation into the original document: the identity
/// embedding of summary atoms, total on the summary side.
pub fn inclusion_relation(ctx: &DocumentContext, summary: &Summary) -> crate::relations::Relation {
    let doc_atoms: Vec<QAId> = ctx.atom_ids().into_iter().collect();
    let kept: Vec<QAId> = summary.atoms.iter().cloned().collect();
    let mut rel = crate::relations::Relation::new(doc_atoms.clone(), kept.clone());
    for (j, atom) in kept.iter().enumerate() {
        if let Some(i) = doc_atoms.iter().position(|a| a == atom) {
            rel.set(i, j);
        }
    }
    rel
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SummaryKind {
    Subdocument,
    Quotient,
    Mixed,
}

/// Classify a summary by how it treats chains of information: dropping whole
/// chains is a subdocument, trimming chains toward their heads (every removed
/// class keeps an answerer above it — the quotient map target) is a quotient.
pub fn classify_summary(ctx: &DocumentContext, sel: &Selection) -> Result<SummaryKind> {
    sel.validate(&ctx.dag).map_err(|e| Error::InvalidSummary(e.to_string()))?;
    let kept_classes = kept_classes(ctx, sel);
    let report = ctx.category.chain_report();
    let closure = ctx.category.closure();
    let all: BTreeSet<QAId> = ctx.category.representatives();

    let subdocument = report.chains.values().all(|chain| {
        chain.is_disjoint(&kept_classes) || chain.is_subset(&kept_classes)
    });
    if subdocument {
        return Ok(SummaryKind::Subdocument);
    }
    let quotient = all.difference(&kept_classes).all(|removed| {
        closure[removed].iter().any(|above| kept_classes.contains(above))
    });
    if quotient {
        return Ok(SummaryKind::Quotient);
    }
    Ok(SummaryKind::Mixed)
}

fn kept_classes(ctx: &DocumentContext, sel: &Selection) -> BTreeSet<QAId> {
    let mut kept = BTreeSet::new();
    for (qa, node) in &ctx.trace.pairs {
        if sel.kept.contains(node) {
            kept.insert(ctx.category.find(qa));
        }
    }
    kept
}

/// Factor a summary into a subdocument step (keep exactly the chains the
/// selection touches, complete) and a quotient step (trim those chains down
/// to the selection). Composing the suppressions reproduces the selection.
pub fn factor_summary(ctx: &DocumentContext, sel: &Selection) -> Result<(Selection, Selection)> {
    sel.validate(&ctx.dag).map_err(|e| Error::InvalidSummary(e.to_string()))?;
    let kept_atoms = ctx.atoms_of_nodes(&sel.kept);
    let report = ctx.category.chain_report();
    let closure = ctx.category.closure();

    // atoms of each chain: atoms whose class is the head or reaches it
    let mut covered: BTreeSet<QAId> = BTreeSet::new();
    for head in &report.heads {
        let chain_atoms: BTreeSet<QAId> = ctx
            .atom_ids()
            .into_iter()
            .filter(|atom| {
                let rep = ctx.category.find(atom);
                rep == *head || closure[&rep].contains(head)
            })
            .collect();
        if !chain_atoms.is_disjoint(&kept_atoms) {
            covered.extend(chain_atoms);
        }
    }

    let sub_step = Selection {
        kept: ctx
            .dag
            .nodes
            .keys()
            .filter(|n| {
                let atoms = ctx.atoms_of_nodes(&BTreeSet::from([(*n).clone()]));
                !atoms.is_disjoint(&covered)
            })
            .cloned()
            .collect(),
    };
    let mut quot_kept = sel.kept.clone();
    quot_kept.extend(ctx.dag.nodes.keys().filter(|n| !sub_step.kept.contains(n)).cloned());
    Ok((sub_step, Selection { kept: quot_kept }))
}

// ---------------------------------------------------------------------------
// Extensions (exegesis)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdditionSpec {
    pub text: String,
    #[serde(default)]
    pub facts: Vec<Fact>,
    /// Attach under an existing node (elaboration); absent means a new chain
    /// head (superdocument).
    #[serde(default)]
    pub attach_under: Option<String>,
    /// Explicitly mark an addition that elaborates overlapping content.
    #[serde(default)]
    pub allow_overlap: bool,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtensionSpec {
    pub additions: Vec<AdditionSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExtensionKind {
    Elaboration,
    Superdocument,
}

/// An extended document: the rebuilt context, the nodes the spec added, and
/// the per-addition classification. The original includes into the extension.
#[derive(Debug)]
pub struct Extension {
    pub context: DocumentContext,
    pub added_nodes: Vec<NodeId>,
    pub classifications: Vec<(NodeId, ExtensionKind)>,
}

impl Extension {
    /// Canonical structural serialization: nodes (id, text, facts, sorted
    /// children) plus atom fact-sets, independent of text offsets and of the
    /// insertion order of siblings.
    pub fn structural_digest(&self) -> String {
        let mut out = String::new();
        for (id, node) in &self.context.dag.nodes {
            let mut children: Vec<&str> = node.children.iter().map(NodeId::as_str).collect();
            children.sort_unstable();
            out.push_str(&format!(
                "node {id} | {} | {:?} | {children:?}\n",
                node.assertion.text, node.assertion.facts,
            ));
        }
        let mut atoms: Vec<String> = self
            .context
            .atoms()
            .iter()
            .map(|a| format!("atom {:?}", a.facts()))
            .collect();
        atoms.sort();
        for atom in atoms {
            out.push_str(&atom);
            out.push('\n');
        }
        out
    }

    /// The original document's atoms embedded into the extension, total on
    /// the original side.
    pub fn inclusion_relation(&self, original: &DocumentContext) -> crate::relations::Relation {
        let ext_atoms: Vec<QAId> = self.context.atom_ids().into_iter().collect();
        let orig_atoms: Vec<QAId> = original.atom_ids().into_iter().collect();
        let mut rel = crate::relations::Relation::new(ext_atoms.clone(), orig_atoms.clone());
        for (j, atom) in orig_atoms.iter().enumerate() {
            if let Some(i) = ext_atoms.iter().position(|a| a == atom) {
                rel.set(i, j);
            }
        }
        rel
    }
}

fn addition_node_id(add: &AdditionSpec) -> Result<NodeId> {
    let facts = FactSet::from_facts(add.facts.iter().cloned())?;
    let anchor = add.attach_under.clone().unwrap_or_default();
    let digest = crate::model::qa_id(&format!("{}@{anchor}", add.text), "", Some(&facts));
    Ok(NodeId::new(format!("x-{}", digest.short())))
}

/// Extend the document per the spec: each addition becomes a new leaf, under
/// its attach node (elaboration) or under the root as a new chain head
/// (superdocument). Additions must be orthogonal to every existing atom
/// unless explicitly marked.
pub fn extend(
    ctx: &DocumentContext,
    spec: &ExtensionSpec,
    config: &PipelineConfig,
    oracle: &dyn SemanticOracle,
) -> Result<Extension> {
    let mut dag = ctx.dag.clone();
    let mut raw_text = ctx.document.raw_text.clone();
    let mut added_nodes = Vec::new();
    let mut classifications = Vec::new();

    for add in &spec.additions {
        let facts = match oracle.mode() {
            Mode::FactSet => {
                if add.facts.is_empty() {
                    return Err(Error::ModeMismatch { expected: "fact-set" });
                }
                Some(FactSet::from_facts(add.facts.iter().cloned())?)
            }
            Mode::Llm => None,
        };
        let assertion = Assertion::new(&add.text, facts)?;

        if !add.allow_overlap {
            for atom in ctx.atoms() {
                if distance_ratio(&assertion, &atom.core, oracle)? != exact_ratio(1, 1) {
                    return Err(Error::OverlapWithExisting(format!(
                        "addition {:?} overlaps atom {}",
                        add.text,
                        atom.id.short()
                    )));
                }
            }
        }

        let parent = match &add.attach_under {
            Some(target) => {
                let target = NodeId::new(target.clone());
                if !dag.nodes.contains_key(&target) {
                    return Err(Error::UnknownAttachNode(target.to_string()));
                }
                classifications.push((addition_node_id(add)?, ExtensionKind::Elaboration));
                target
            }
            None => {
                classifications.push((addition_node_id(add)?, ExtensionKind::Superdocument));
                dag.root.clone()
            }
        };

        let id = addition_node_id(add)?;
        if dag.nodes.contains_key(&id) {
            return Err(Error::InvalidFixture(format!("duplicate addition node {id}")));
        }
        let start = raw_text.len() + 1;
        raw_text.push(' ');
        raw_text.push_str(&add.text);
        let span = TextSpan::new(start, raw_text.len());
        dag.nodes.insert(
            id.clone(),
            DagNode {
                id: id.clone(),
                assertion,
                span,
                parents: vec![parent.clone()],
                children: vec![],
            },
        );
        let parent_node = dag.nodes.get_mut(&parent).expect("parent exists");
        parent_node.children.push(id.clone());
        added_nodes.push(id);
    }

    let document =
        crate::model::Document::new(ctx.document.id.clone(), raw_text, ctx.document.mode);
    let context = DocumentContext::build_from_parts(document, dag, config, oracle)?;
    Ok(Extension { context, added_nodes, classifications })
}

/// Every extension factors as a superdocument step (all new chain heads
/// first) followed by an elaboration step (details, including those under
/// the new heads).
pub fn factor_extension(spec: &ExtensionSpec) -> (ExtensionSpec, ExtensionSpec) {
    let (supers, elabs): (Vec<AdditionSpec>, Vec<AdditionSpec>) = spec
        .additions
        .iter()
        .cloned()
        .partition(|add| add.attach_under.is_none());
    (ExtensionSpec { additions: supers }, ExtensionSpec { additions: elabs })
}

// ---------------------------------------------------------------------------
// Markup rendering
// ---------------------------------------------------------------------------

/// Summary rendering mirroring the struck-through presentation: removed node
/// sentences wrapped in `~~ ~~`.
pub fn render_summary_markup(ctx: &DocumentContext, summary: &Summary) -> String {
    let mut parts = Vec::new();
    for id in ctx.dag.document_order() {
        let text = &ctx.dag.nodes[&id].assertion.text;
        if summary.selection.kept.contains(&id) {
            parts.push(text.clone());
        } else {
            parts.push(format!("~~{text}~~"));
        }
    }
    parts.join(" ")
}

/// Extension rendering: added node sentences wrapped in `__ __`.
pub fn render_extension_markup(ext: &Extension) -> String {
    let added: BTreeSet<&NodeId> = ext.added_nodes.iter().collect();
    let mut parts = Vec::new();
    for id in ext.context.dag.document_order() {
        let text = &ext.context.dag.nodes[&id].assertion.text;
        if added.contains(&id) {
            parts.push(format!("__{text}__"));
        } else {
            parts.push(text.clone());
        }
    }
    parts.join(" ")
}
