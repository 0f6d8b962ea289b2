//! Rhetorical structure: the abstractive DAG of one-sentence summaries, its
//! conversion to core QA pairs, and the trace relation between QAs and nodes.
//!
//! The DAG is built as a tree but nodes admit multiple parents; validation
//! only forbids cycles. Fact-set documents arrive pre-annotated; llm-mode
//! documents are chunked and summarized recursively through the oracle.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Assertion, Document, Fact, FactSet, Mode, QAId, QAPair};
use crate::oracle::{split_sentences, SemanticOracle, TextSpan};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub String);

impl NodeId {
    pub fn new(s: impl Into<String>) -> Self {
        NodeId(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// One node of the rhetorical structure: a one-sentence abstractive summary
/// of the contiguous chunk covered by `span`.
#[derive(Debug, Clone, Serialize)]
pub struct DagNode {
    pub id: NodeId,
    pub assertion: Assertion,
    pub span: TextSpan,
    pub parents: Vec<NodeId>,
    pub children: Vec<NodeId>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AbstractiveDag {
    pub nodes: BTreeMap<NodeId, DagNode>,
    pub root: NodeId,
}

impl AbstractiveDag {
    pub fn node(&self, id: &NodeId) -> Result<&DagNode> {
        self.nodes.get(id).ok_or_else(|| Error::UnknownNode(id.to_string()))
    }

    pub fn node_ids(&self) -> impl Iterator<Item = &NodeId> {
        self.nodes.keys()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes ordered by span start, wider spans first, then id: parents
    /// precede children and text reads in document order.
    pub fn document_order(&self) -> Vec<NodeId> {
        let mut ids: Vec<NodeId> = self.nodes.keys().cloned().collect();
        ids.sort_by(|a, b| {
            let na = &self.nodes[a];
            let nb = &self.nodes[b];
            na.span
                .start
                .cmp(&nb.span.start)
                .then(nb.span.end.cmp(&na.span.end))
                .then(a.cmp(b))
        });
        ids
    }

    pub fn leaves(&self) -> Vec<NodeId> {
        self.document_order()
            .into_iter()
            .filter(|id| self.nodes[id].children.is_empty())
            .collect()
    }

    /// BFS depth per node; the root is level 0.
    pub fn levels(&self) -> BTreeMap<NodeId, usize> {
        let mut depth = BTreeMap::new();
        let mut queue = VecDeque::from([(self.root.clone(), 0usize)]);
        while let Some((id, d)) = queue.pop_front() {
            if depth.contains_key(&id) {
                continue;
            }
            depth.insert(id.clone(), d);
            for child in &self.nodes[&id].children {
                queue.push_back((child.clone(), d + 1));
            }
        }
        depth
    }

    /// Rejects cycles and unreachable nodes.
    pub fn validate(&self) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::EmptyDocument);
        }
        if !self.nodes.contains_key(&self.root) {
            return Err(Error::UnknownNode(self.root.to_string()));
        }
        // cycle check: DFS with colors
        let mut state: BTreeMap<&NodeId, u8> = BTreeMap::new();
        fn visit<'a>(
            dag: &'a AbstractiveDag,
            id: &'a NodeId,
            state: &mut BTreeMap<&'a NodeId, u8>,
        ) -> Result<()> {
            match state.get(id) {
                Some(1) => return Err(Error::InvalidFixture(format!("cycle through node {id}"))),
                Some(2) => return Ok(()),
                _ => {}
            }
            state.insert(id, 1);
            for child in &dag.node(id)?.children {
                visit(dag, child, state)?;
            }
            state.insert(id, 2);
            Ok(())
        }
        visit(self, &self.root, &mut state)?;
        let reached = state.len();
        if reached != self.nodes.len() {
            return Err(Error::InvalidFixture(format!(
                "{} of {} nodes unreachable from the root",
                self.nodes.len() - reached,
                self.nodes.len()
            )));
        }
        Ok(())
    }

    /// Per-level fact coverage: level index → union of node fact keys. Levels
    /// of a fully annotated document are each a complete summary, so every
    /// level's union should equal the root level's; reported, not enforced.
    pub fn level_fact_coverage(&self) -> Vec<(usize, BTreeSet<String>)> {
        let levels = self.levels();
        let max = levels.values().copied().max().unwrap_or(0);
        let mut out = Vec::new();
        for level in 0..=max {
            let mut keys = BTreeSet::new();
            for (id, d) in &levels {
                // a leaf stands for itself on every deeper level
                let node = &self.nodes[id];
                if *d == level || (node.children.is_empty() && *d < level) {
                    if let Some(facts) = &node.assertion.facts {
                        keys.extend(facts.key_set());
                    }
                }
            }
            out.push((level, keys));
        }
        out
    }

    pub fn complete_levels(&self) -> bool {
        let coverage = self.level_fact_coverage();
        match coverage.first() {
            Some((_, root_keys)) => coverage.iter().all(|(_, keys)| keys == root_keys),
            None => true,
        }
    }
}

/// The same structure with each node's assertion converted to core QA pairs.
#[derive(Debug, Clone, Serialize)]
pub struct CoreQADag {
    pub dag: AbstractiveDag,
    pub core_qas: BTreeMap<NodeId, Vec<QAPair>>,
}

/// Total, surjective relation between QAs and the DAG nodes they were
/// constructed or decomposed from.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct TraceRelation {
    pub pairs: BTreeSet<(QAId, NodeId)>,
}

impl TraceRelation {
    pub fn new() -> Self {
        TraceRelation::default()
    }

    pub fn add(&mut self, qa: QAId, node: NodeId) {
        self.pairs.insert((qa, node));
    }

    pub fn nodes_of(&self, qa: &QAId) -> BTreeSet<NodeId> {
        self.pairs
            .iter()
            .filter(|(q, _)| q == qa)
            .map(|(_, n)| n.clone())
            .collect()
    }

    pub fn qas_of(&self, node: &NodeId) -> BTreeSet<QAId> {
        self.pairs
            .iter()
            .filter(|(_, n)| n == node)
            .map(|(q, _)| q.clone())
            .collect()
    }

    pub fn restricted_to(&self, qas: &BTreeSet<QAId>) -> TraceRelation {
        TraceRelation {
            pairs: self.pairs.iter().filter(|(q, _)| qas.contains(q)).cloned().collect(),
        }
    }

    /// Totality on QAs and surjectivity on nodes; a violation signals a
    /// pipeline bug.
    pub fn verify(&self, qas: &BTreeSet<QAId>, nodes: &BTreeSet<NodeId>) -> Result<()> {
        for qa in qas {
            if !self.pairs.iter().any(|(q, _)| q == qa) {
                return Err(Error::BrokenTrace(format!("QA {} relates to no node", qa.short())));
            }
        }
        for node in nodes {
            if !self.pairs.iter().any(|(_, n)| n == node) {
                return Err(Error::BrokenTrace(format!("node {node} relates to no QA")));
            }
        }
        Ok(())
    }

    /// The relation as a boolean matrix (rows: nodes, cols: QAs).
    pub fn to_relation(&self, qas: &[QAId], nodes: &[NodeId]) -> crate::relations::Relation {
        let col_labels: Vec<QAId> = qas.to_vec();
        let row_labels: Vec<QAId> = nodes
            .iter()
            .map(|n| crate::model::qa_id(&format!("node:{n}"), "", None))
            .collect();
        let mut rel = crate::relations::Relation::new(row_labels, col_labels);
        for (i, node) in nodes.iter().enumerate() {
            for (j, qa) in qas.iter().enumerate() {
                if self.pairs.contains(&(qa.clone(), node.clone())) {
                    rel.set(i, j);
                }
            }
        }
        rel
    }
}

// ---------------------------------------------------------------------------
// Synthetic (fact-set) document format
// ---------------------------------------------------------------------------

/// On-disk form of an annotated document: the DAG is read directly from the
/// node records, node summaries are the provided texts, and leaf texts
/// concatenate (in order, single-space separated) to the document text.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticDocument {
    pub id: String,
    pub text: String,
    pub nodes: Vec<SyntheticNode>,
    pub root: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticNode {
    pub id: String,
    pub text: String,
    #[serde(default)]
    pub facts: Vec<Fact>,
    #[serde(default)]
    pub children: Vec<String>,
}

impl SyntheticDocument {
    pub fn from_json(json: &str) -> Result<Self> {
        let doc: SyntheticDocument = serde_json::from_str(json)?;
        Ok(doc)
    }

    pub fn to_document(&self) -> Document {
        Document::new(self.id.clone(), self.text.clone(), Mode::FactSet)
    }

    /// Derives the abstractive DAG; character spans come from leaf text
    /// concatenation, internal nodes cover their descendants, and the root
    /// spans the whole text.
    pub fn to_dag(&self) -> Result<AbstractiveDag> {
        if self.nodes.is_empty() {
            return Err(Error::EmptyDocument);
        }
        let mut by_id: BTreeMap<String, &SyntheticNode> = BTreeMap::new();
        for node in &self.nodes {
            if by_id.insert(node.id.clone(), node).is_some() {
                return Err(Error::InvalidFixture(format!("duplicate node id {}", node.id)));
            }
        }
        for node in &self.nodes {
            for child in &node.children {
                if !by_id.contains_key(child) {
                    return Err(Error::UnknownNode(child.clone()));
                }
            }
        }
        if !by_id.contains_key(&self.root) {
            return Err(Error::UnknownNode(self.root.clone()));
        }

        // leaf spans: scan the document text for each leaf's text in DFS order
        let mut spans: BTreeMap<String, TextSpan> = BTreeMap::new();
        let mut cursor = 0usize;
        let mut order: Vec<&SyntheticNode> = Vec::new();
        let mut stack = vec![self.root.clone()];
        let mut seen = BTreeSet::new();
        while let Some(id) = stack.pop() {
            if !seen.insert(id.clone()) {
                continue;
            }
            let node = by_id[&id];
            order.push(node);
            for child in node.children.iter().rev() {
                stack.push(child.clone());
            }
        }
        for node in &order {
            if node.children.is_empty() {
                let found = self.text[cursor..].find(&node.text).map(|i| cursor + i).ok_or_else(
                    || {
                        Error::InvalidFixture(format!(
                            "leaf text of node {} not found in document text after offset {cursor}",
                            node.id
                        ))
                    },
                )?;
                spans.insert(node.id.clone(), TextSpan::new(found, found + node.text.len()));
                cursor = found + node.text.len();
            }
        }
        if !self.text[cursor..].trim().is_empty() {
            return Err(Error::InvalidFixture(
                "document text extends past the last leaf".into(),
            ));
        }

        // internal spans cover descendants
        fn span_of(
            id: &str,
            by_id: &BTreeMap<String, &SyntheticNode>,
            spans: &mut BTreeMap<String, TextSpan>,
        ) -> TextSpan {
            if let Some(s) = spans.get(id) {
                return *s;
            }
            let node = by_id[id];
            let child_spans: Vec<TextSpan> =
                node.children.iter().map(|c| span_of(c, by_id, spans)).collect();
            let start = child_spans.iter().map(|s| s.start).min().unwrap_or(0);
            let end = child_spans.iter().map(|s| s.end).max().unwrap_or(0);
            let span = TextSpan::new(start, end);
            spans.insert(id.to_string(), span);
            span
        }
        for node in &self.nodes {
            span_of(&node.id, &by_id, &mut spans);
        }
        // the root covers everything, including text outside its own summary
        spans.insert(self.root.clone(), TextSpan::new(0, self.text.len()));

        let mut parents: BTreeMap<String, Vec<NodeId>> = BTreeMap::new();
        for node in &self.nodes {
            for child in &node.children {
                parents.entry(child.clone()).or_default().push(NodeId::new(node.id.clone()));
            }
        }

        let mut nodes = BTreeMap::new();
        for node in &self.nodes {
            let facts = FactSet::from_facts(node.facts.iter().cloned())?;
            let assertion = Assertion::new(&node.text, Some(facts))?;
            nodes.insert(
                NodeId::new(node.id.clone()),
                DagNode {
                    id: NodeId::new(node.id.clone()),
                    assertion,
                    span: spans[&node.id],
                    parents: parents.remove(&node.id).unwrap_or_default(),
                    children: node.children.iter().map(|c| NodeId::new(c.clone())).collect(),
                },
            );
        }
        let dag = AbstractiveDag { nodes, root: NodeId::new(self.root.clone()) };
        dag.validate()?;
        Ok(dag)
    }
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Builds the abstractive DAG of an llm-mode document by recursive
/// chunk-and-summarize; recursion stops at single sentences.
pub fn build_abstractive_dag(
    doc: &Document,
    oracle: &dyn SemanticOracle,
    fanout_limit: usize,
) -> Result<AbstractiveDag> {
    if doc.raw_text.trim().is_empty() {
        return Err(Error::EmptyDocument);
    }
    let mut nodes: BTreeMap<NodeId, DagNode> = BTreeMap::new();
    let root = NodeId::new("n0");
    grow(
        &doc.raw_text,
        TextSpan::new(0, doc.raw_text.len()),
        root.clone(),
        None,
        oracle,
        fanout_limit,
        &mut nodes,
    )?;
    let dag = AbstractiveDag { nodes, root };
    dag.validate()?;
    Ok(dag)
}

fn grow(
    text: &str,
    span: TextSpan,
    id: NodeId,
    parent: Option<NodeId>,
    oracle: &dyn SemanticOracle,
    fanout_limit: usize,
    nodes: &mut BTreeMap<NodeId, DagNode>,
) -> Result<()> {
    let chunk_text = span.slice(text);
    let assertion = oracle.summarize_chunk(chunk_text)?;
    let single_sentence = split_sentences(chunk_text).len() <= 1;
    let mut children = Vec::new();
    if !single_sentence {
        let sub_spans = oracle.chunk(chunk_text, fanout_limit)?;
        if sub_spans.len() > 1 {
            for (i, sub) in sub_spans.iter().enumerate() {
                children.push((
                    NodeId::new(format!("{}.{}", id.as_str(), i)),
                    TextSpan::new(span.start + sub.start, span.start + sub.end),
                ));
            }
        }
    }
    nodes.insert(
        id.clone(),
        DagNode {
            id: id.clone(),
            assertion,
            span,
            parents: parent.into_iter().collect(),
            children: children.iter().map(|(c, _)| c.clone()).collect(),
        },
    );
    for (child_id, child_span) in children {
        grow(text, child_span, child_id, Some(id.clone()), oracle, fanout_limit, nodes)?;
    }
    Ok(())
}

/// Converts each node's assertion into core QA pairs. In fact-set mode every
/// node yields one QA carrying its fact payload; in llm mode compound
/// assertions are split into sub-statements by the oracle.
pub fn to_core_qa_dag(dag: &AbstractiveDag, oracle: &dyn SemanticOracle) -> Result<CoreQADag> {
    let mut core_qas = BTreeMap::new();
    for (id, node) in &dag.nodes {
        let qas = oracle.core_qas(&node.assertion)?;
        if qas.is_empty() {
            return Err(Error::BrokenTrace(format!("node {id} produced no core QAs")));
        }
        core_qas.insert(id.clone(), qas);
    }
    Ok(CoreQADag { dag: dag.clone(), core_qas })
}

/// The trace recorded during construction, verified total and surjective.
pub fn trace(core_dag: &CoreQADag) -> Result<TraceRelation> {
    let mut trace = TraceRelation::new();
    for (node, qas) in &core_dag.core_qas {
        for qa in qas {
            trace.add(qa.id.clone(), node.clone());
        }
    }
    let qa_ids: BTreeSet<QAId> =
        core_dag.core_qas.values().flatten().map(|qa| qa.id.clone()).collect();
    let node_ids: BTreeSet<NodeId> = core_dag.dag.nodes.keys().cloned().collect();
    trace.verify(&qa_ids, &node_ids)?;
    Ok(trace)
}
