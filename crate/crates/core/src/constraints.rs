//! Verifiable consistency tasks generated from document structure, with
//! ground-truth verdicts recomputable from the serialized inputs alone.
//!
//! Positive tasks sample real structure and always verify true; planted
//! negatives corrupt one element and always verify false, giving reward
//! signals contrast.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::enumerate_hierarchical;
use crate::model::FactSet;
use crate::pipeline::DocumentContext;
use crate::rhetoric::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskKind {
    Transitivity,
    LatticeClosure,
    DecompRoundtrip,
    Orthogonality,
}

impl TaskKind {
    pub const ALL: [TaskKind; 4] = [
        TaskKind::Transitivity,
        TaskKind::LatticeClosure,
        TaskKind::DecompRoundtrip,
        TaskKind::Orthogonality,
    ];
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            TaskKind::Transitivity => "transitivity",
            TaskKind::LatticeClosure => "lattice-closure",
            TaskKind::DecompRoundtrip => "decomp-roundtrip",
            TaskKind::Orthogonality => "orthogonality",
        };
        f.write_str(name)
    }
}

impl FromStr for TaskKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "transitivity" => Ok(TaskKind::Transitivity),
            "lattice-closure" => Ok(TaskKind::LatticeClosure),
            "decomp-roundtrip" => Ok(TaskKind::DecompRoundtrip),
            "orthogonality" => Ok(TaskKind::Orthogonality),
            other => Err(Error::MalformedTask(format!("unknown task kind: {other}"))),
        }
    }
}

/// One self-contained task: the serialized structures, the claimed verdict,
/// and the recomputed one. Reproducible from (document, kind, seed).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstraintTask {
    pub kind: TaskKind,
    pub inputs: serde_json::Value,
    pub expected: bool,
    pub verifier_verdict: bool,
    pub seed: u64,
    pub doc_id: String,
}

/// Generates `k` seeded tasks of one kind. With `planted_negatives`, each
/// task is corrupted into a verifiable violation instead.
pub fn gen_tasks(
    ctx: &DocumentContext,
    kind: TaskKind,
    k: usize,
    seed: u64,
    planted_negatives: bool,
) -> Result<Vec<ConstraintTask>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ kind_salt(kind));
    let mut tasks = Vec::with_capacity(k);
    for _ in 0..k {
        let inputs = match kind {
            TaskKind::Transitivity => transitivity_inputs(ctx, &mut rng, planted_negatives)?,
            TaskKind::LatticeClosure => lattice_inputs(ctx, &mut rng, planted_negatives)?,
            TaskKind::DecompRoundtrip => decomp_inputs(ctx, &mut rng, planted_negatives)?,
            TaskKind::Orthogonality => orthogonality_inputs(ctx, &mut rng, planted_negatives)?,
        };
        let expected = !planted_negatives;
        let task = ConstraintTask {
            kind,
            inputs,
            expected,
            verifier_verdict: false,
            seed,
            doc_id: ctx.document.id.clone(),
        };
        let verdict = verify_task(&task)?;
        tasks.push(ConstraintTask { verifier_verdict: verdict, ..task });
    }
    Ok(tasks)
}

fn kind_salt(kind: TaskKind) -> u64 {
    match kind {
        TaskKind::Transitivity => 0x7472616e73,
        TaskKind::LatticeClosure => 0x6c617474,
        TaskKind::DecompRoundtrip => 0x6465636f,
        TaskKind::Orthogonality => 0x6f727468,
    }
}

/// Composability: given closure edges and a premise a→b, b→c, the closure
/// must contain a→c.
fn transitivity_inputs(
    ctx: &DocumentContext,
    rng: &mut ChaCha8Rng,
    planted: bool,
) -> Result<serde_json::Value> {
    let closure = ctx.category.closure();
    let mut composable: Vec<(String, String, String)> = Vec::new();
    for (a, reach_a) in &closure {
        for b in reach_a {
            for c in &closure[b] {
                composable.push((a.to_string(), b.to_string(), c.to_string()));
            }
        }
    }
    if composable.is_empty() {
        return Err(Error::InsufficientStructure(
            "no composable morphism pair for transitivity".into(),
        ));
    }
    composable.sort();
    let (a, b, c) = composable[rng.gen_range(0..composable.len())].clone();
    let mut edges: BTreeSet<(String, String)> = BTreeSet::new();
    for (src, reach) in &closure {
        for dst in reach {
            edges.insert((src.to_string(), dst.to_string()));
        }
    }
    if planted {
        // remove the composite edge the premise demands
        edges.remove(&(a.clone(), c.clone()));
    }
    Ok(serde_json::json!({
        "closure_edges": edges.iter().collect::<Vec<_>>(),
        "premise": [a, b, c],
    }))
}

/// Closure under the lattice operations: join and meet of two hierarchical
/// selections must be hierarchical.
fn lattice_inputs(
    ctx: &DocumentContext,
    rng: &mut ChaCha8Rng,
    planted: bool,
) -> Result<serde_json::Value> {
    let hierarchical = enumerate_hierarchical(&ctx.dag, 4096)?;
    if hierarchical.len() < 2 {
        return Err(Error::InsufficientStructure("fewer than two hierarchical selections".into()));
    }
    let s1 = &hierarchical[rng.gen_range(0..hierarchical.len())];
    let s2 = &hierarchical[rng.gen_range(0..hierarchical.len())];
    let mut kept1: BTreeSet<NodeId> = s1.kept.clone();
    let mut kept2: BTreeSet<NodeId> = s2.kept.clone();
    if planted {
        // keep a child in the join while its parent is in neither side
        let candidates: Vec<NodeId> = ctx
            .dag
            .nodes
            .values()
            .filter(|n| !n.children.is_empty())
            .map(|n| n.id.clone())
            .collect();
        let parent = candidates
            .first()
            .ok_or_else(|| Error::InsufficientStructure("no parent node to corrupt".into()))?;
        let child = ctx.dag.nodes[parent].children[0].clone();
        kept1.remove(parent);
        kept2.remove(parent);
        kept1.insert(child);
    }
    let parents: BTreeMap<String, Vec<String>> = ctx
        .dag
        .nodes
        .values()
        .map(|n| (n.id.to_string(), n.parents.iter().map(|p| p.to_string()).collect()))
        .collect();
    Ok(serde_json::json!({
        "parents": parents,
        "s1": kept1.iter().map(|n| n.to_string()).collect::<Vec<_>>(),
        "s2": kept2.iter().map(|n| n.to_string()).collect::<Vec<_>>(),
    }))
}

/// Conservation: the union of decomposition pieces equals the key-wise union
/// of the original pair.
fn decomp_inputs(
    ctx: &DocumentContext,
    rng: &mut ChaCha8Rng,
    planted: bool,
) -> Result<serde_json::Value> {
    let with_facts: Vec<&crate::model::QAPair> =
        ctx.population.iter().filter(|qa| qa.facts().map(|f| !f.is_empty()).unwrap_or(false)).collect();
    if with_facts.len() < 2 {
        return Err(Error::InsufficientStructure("fewer than two fact-backed QAs".into()));
    }
    let qa1 = with_facts[rng.gen_range(0..with_facts.len())];
    let qa2 = with_facts[rng.gen_range(0..with_facts.len())];
    let oracle = crate::oracle::FactSetOracle::new();
    let triple = crate::algebra::decomp(qa1, qa2, &oracle)?;
    let mut pieces: Vec<FactSet> =
        triple.pieces().filter_map(|p| p.facts().cloned()).collect();
    if planted {
        if let Some(first) = pieces.first_mut() {
            let key = first.keys().next().map(str::to_string);
            if let Some(key) = key {
                let reduced: Vec<crate::model::Fact> =
                    first.facts().into_iter().filter(|f| f.key != key).collect();
                *first = FactSet::from_facts(reduced)?;
            }
        }
        pieces.retain(|p| !p.is_empty());
        if pieces.is_empty() {
            // dropping the only fact left nothing: drop a whole piece instead
            pieces = triple.pieces().skip(1).filter_map(|p| p.facts().cloned()).collect();
        }
    }
    Ok(serde_json::json!({
        "qa1_facts": qa1.facts().unwrap(),
        "qa2_facts": qa2.facts().unwrap(),
        "pieces": pieces,
    }))
}

/// Orthogonality: a sampled atom pair must be at distance 1 (disjoint keys).
fn orthogonality_inputs(
    ctx: &DocumentContext,
    rng: &mut ChaCha8Rng,
    planted: bool,
) -> Result<serde_json::Value> {
    let atoms = ctx.atoms();
    if atoms.len() < 2 {
        return Err(Error::InsufficientStructure("fewer than two atoms".into()));
    }
    let mut indices: Vec<usize> = (0..atoms.len()).collect();
    indices.shuffle(rng);
    let (i, j) = (indices[0], indices[1]);
    let mut first = atoms[i].facts().cloned().unwrap_or_default();
    let second = atoms[j].facts().cloned().unwrap_or_default();
    if planted {
        // duplicate one fact of the second atom into the first
        if let Some(fact) = second.facts().first() {
            first = first.merge_union(&FactSet::from_facts([fact.clone()])?);
        }
    }
    Ok(serde_json::json!({
        "atom1_facts": first,
        "atom2_facts": second,
    }))
}

/// Recomputes the verdict from the serialized inputs, independent of the
/// stored one.
pub fn verify_task(task: &ConstraintTask) -> Result<bool> {
    match task.kind {
        TaskKind::Transitivity => {
            #[derive(Deserialize)]
            struct Inputs {
                closure_edges: Vec<(String, String)>,
                premise: (String, String, String),
            }
            let inputs: Inputs = parse_inputs(&task.inputs)?;
            if inputs.premise.0.is_empty() {
                return Err(Error::MalformedTask("empty premise".into()));
            }
            let edges: BTreeSet<(String, String)> = inputs.closure_edges.into_iter().collect();
            let (a, b, c) = inputs.premise;
            if !edges.contains(&(a.clone(), b.clone())) || !edges.contains(&(b, c.clone()))
            {
                return Err(Error::MalformedTask("premise edges missing from closure".into()));
            }
            Ok(edges.contains(&(a, c)))
        }
        TaskKind::LatticeClosure => {
            #[derive(Deserialize)]
            struct Inputs {
                parents: BTreeMap<String, Vec<String>>,
                s1: Vec<String>,
                s2: Vec<String>,
            }
            let inputs: Inputs = parse_inputs(&task.inputs)?;
            if inputs.parents.is_empty() {
                return Err(Error::MalformedTask("empty structure".into()));
            }
            let hierarchical = |kept: &BTreeSet<String>| {
                kept.iter().all(|n| {
                    inputs
                        .parents
                        .get(n)
                        .map(|ps| ps.iter().all(|p| kept.contains(p)))
                        .unwrap_or(false)
                })
            };
            let s1: BTreeSet<String> = inputs.s1.into_iter().collect();
            let s2: BTreeSet<String> = inputs.s2.into_iter().collect();
            let joined: BTreeSet<String> = s1.union(&s2).cloned().collect();
            let met: BTreeSet<String> = s1.intersection(&s2).cloned().collect();
            Ok(hierarchical(&joined) && hierarchical(&met))
        }
        TaskKind::DecompRoundtrip => {
            #[derive(Deserialize)]
            struct Inputs {
                qa1_facts: FactSet,
                qa2_facts: FactSet,
                pieces: Vec<FactSet>,
            }
            let inputs: Inputs = parse_inputs(&task.inputs)?;
            if inputs.qa1_facts.is_empty() && inputs.qa2_facts.is_empty() {
                return Err(Error::MalformedTask("empty pair".into()));
            }
            let original = inputs.qa1_facts.merge_union(&inputs.qa2_facts);
            let recomposed = inputs
                .pieces
                .iter()
                .fold(FactSet::new(), |acc, p| acc.merge_union(p));
            Ok(original == recomposed)
        }
        TaskKind::Orthogonality => {
            #[derive(Deserialize)]
            struct Inputs {
                atom1_facts: FactSet,
                atom2_facts: FactSet,
            }
            let inputs: Inputs = parse_inputs(&task.inputs)?;
            if inputs.atom1_facts.is_empty() || inputs.atom2_facts.is_empty() {
                return Err(Error::MalformedTask("empty atom".into()));
            }
            Ok(inputs.atom1_facts.keys_disjoint(&inputs.atom2_facts))
        }
    }
}

fn parse_inputs<T: serde::de::DeserializeOwned>(value: &serde_json::Value) -> Result<T> {
    serde_json::from_value(value.clone())
        .map_err(|e| Error::MalformedTask(format!("inputs do not parse: {e}")))
}

/// One task per line.
pub fn to_jsonl(tasks: &[ConstraintTask]) -> Result<String> {
    let mut out = String::new();
    for task in tasks {
        out.push_str(&serde_json::to_string(task)?);
        out.push('\n');
    }
    Ok(out)
}
