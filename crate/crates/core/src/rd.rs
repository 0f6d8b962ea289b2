//! Rate-distortion evaluation of summarization schemes: rate is the summary
//! length in words, distortion is the fraction of the document's atomic QAs
//! the summary cannot answer consistently.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{suppress, Selection, Summary};
use crate::model::word_count;
use crate::oracle::SemanticOracle;
use crate::pipeline::DocumentContext;
use crate::rhetoric::NodeId;
use crate::scalar::{ratio_to_real, Real};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RDPoint<R: Real> {
    pub method: String,
    pub rate: u64,
    pub distortion: R,
}

/// Non-increasing staircase: at each listed rate, the lowest distortion
/// achievable at that rate or lower.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OperationalCurve<R: Real> {
    pub steps: Vec<(u64, R)>,
}

impl<R: Real> OperationalCurve<R> {
    /// Curve value at an arbitrary rate: the distortion of the largest step
    /// at or below it (1.0 below the first step).
    pub fn at(&self, rate: u64) -> R {
        let mut best = R::one();
        for (r, d) in &self.steps {
            if *r <= rate {
                best = *d;
            }
        }
        best
    }
}

/// Distortion of one summary against the document's evaluation set (its
/// atoms as QAs): the fraction not answered consistently.
pub fn evaluate_summary<R: Real>(
    ctx: &DocumentContext,
    summary: &Summary,
    oracle: &dyn SemanticOracle,
    method: &str,
) -> Result<RDPoint<R>> {
    let atoms = ctx.atoms();
    if atoms.is_empty() {
        return Err(Error::NotProcessed("document has no atoms".into()));
    }
    let mut missed = 0u64;
    for atom in atoms {
        let verdict = oracle.answers(&summary.assertion, atom)?;
        if !verdict.consistent {
            missed += 1;
        }
    }
    Ok(RDPoint {
        method: method.to_string(),
        rate: word_count(&summary.text) as u64,
        distortion: ratio_to_real::<R>(missed, atoms.len() as u64),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Keep highest-level nodes first, then by trace degree descending,
    /// ties broken by core QA id; never keeps a node before its parents.
    LatticeGreedy,
    /// Seeded random node order, greedily packed into the budget.
    RandomSelection,
    /// The first N words of the raw text; a node counts once fully covered.
    LeadingText,
}

impl Strategy {
    pub const ALL: [Strategy; 3] =
        [Strategy::LatticeGreedy, Strategy::RandomSelection, Strategy::LeadingText];

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::LatticeGreedy => "lattice-greedy",
            Strategy::RandomSelection => "random-selection",
            Strategy::LeadingText => "leading-text",
        }
    }
}

impl FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lattice-greedy" => Ok(Strategy::LatticeGreedy),
            "random-selection" | "random" => Ok(Strategy::RandomSelection),
            "leading-text" | "truncate" => Ok(Strategy::LeadingText),
            other => Err(Error::UnknownStrategy(other.to_string())),
        }
    }
}

/// One point per budget (a maximum summary length in words), strictly
/// increasing budgets required.
pub fn sweep<R: Real>(
    ctx: &DocumentContext,
    strategy: Strategy,
    budgets: &[u64],
    oracle: &dyn SemanticOracle,
    seed: u64,
) -> Result<Vec<RDPoint<R>>> {
    if budgets.is_empty() {
        return Err(Error::EmptyInput);
    }
    if budgets.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::DegenerateInput("budgets must be strictly increasing".into()));
    }
    let mut points = Vec::with_capacity(budgets.len());
    for &budget in budgets {
        let point = match strategy {
            Strategy::LeadingText => leading_text_point(ctx, budget, oracle)?,
            Strategy::LatticeGreedy => {
                let sel = lattice_greedy_selection(ctx, budget);
                let summary = suppress(ctx, &sel, true)?;
                evaluate_summary(ctx, &summary, oracle, strategy.name())?
            }
            Strategy::RandomSelection => {
                let sel = random_selection(ctx, budget, seed);
                let summary = suppress(ctx, &sel, true)?;
                evaluate_summary(ctx, &summary, oracle, strategy.name())?
            }
        };
        points.push(point);
    }
    Ok(points)
}

/// The node selection a strategy picks at one budget; used by the sweep and
/// exposed for budgeted summarization.
pub fn select_nodes(ctx: &DocumentContext, strategy: Strategy, budget: u64, seed: u64) -> Selection {
    match strategy {
        Strategy::LatticeGreedy => lattice_greedy_selection(ctx, budget),
        Strategy::RandomSelection => random_selection(ctx, budget, seed),
        Strategy::LeadingText => {
            let prefix = leading_prefix(&ctx.document.raw_text, budget).0;
            Selection {
                kept: ctx
                    .dag
                    .nodes
                    .values()
                    .filter(|n| prefix.contains(&n.span))
                    .map(|n| n.id.clone())
                    .collect(),
            }
        }
    }
}

fn node_words(ctx: &DocumentContext, id: &NodeId) -> u64 {
    word_count(&ctx.dag.nodes[id].assertion.text) as u64
}

fn lattice_greedy_selection(ctx: &DocumentContext, budget: u64) -> Selection {
    let levels = ctx.dag.levels();
    let mut order: Vec<NodeId> = ctx.dag.nodes.keys().cloned().collect();
    order.sort_by_key(|id| {
        let degree = ctx.ortho.trace.qas_of(id).len();
        let tie = ctx.core_dag.core_qas[id].first().map(|qa| qa.id.clone());
        (levels[id], std::cmp::Reverse(degree), tie)
    });
    let mut kept: BTreeSet<NodeId> = BTreeSet::new();
    let mut used = 0u64;
    for id in order {
        // hierarchical: a node only enters once all its parents are in
        if !ctx.dag.nodes[&id].parents.iter().all(|p| kept.contains(p)) {
            continue;
        }
        let cost = node_words(ctx, &id);
        if used + cost <= budget {
            used += cost;
            kept.insert(id);
        }
    }
    Selection { kept }
}

fn random_selection(ctx: &DocumentContext, budget: u64, seed: u64) -> Selection {
    let mut order: Vec<NodeId> = ctx.dag.nodes.keys().cloned().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ budget.wrapping_mul(0x9e3779b97f4a7c15));
    order.shuffle(&mut rng);
    let mut kept = BTreeSet::new();
    let mut used = 0u64;
    for id in order {
        let cost = node_words(ctx, &id);
        if used + cost <= budget {
            used += cost;
            kept.insert(id);
        }
    }
    Selection { kept }
}

/// Byte span and word count of the first `budget` words of the text.
fn leading_prefix(text: &str, budget: u64) -> (crate::oracle::TextSpan, u64) {
    let mut end = 0usize;
    let mut words = 0u64;
    let mut iter = text.char_indices().peekable();
    'scan: while words < budget {
        while let Some(&(_, c)) = iter.peek() {
            if !c.is_whitespace() {
                break;
            }
            iter.next();
        }
        if iter.peek().is_none() {
            break 'scan;
        }
        while let Some(&(i, c)) = iter.peek() {
            if c.is_whitespace() {
                break;
            }
            end = i + c.len_utf8();
            iter.next();
        }
        words += 1;
    }
    (crate::oracle::TextSpan::new(0, end), words)
}

fn leading_text_point<R: Real>(
    ctx: &DocumentContext,
    budget: u64,
    oracle: &dyn SemanticOracle,
) -> Result<RDPoint<R>> {
    let (_, words) = leading_prefix(&ctx.document.raw_text, budget);
    let sel = select_nodes(ctx, Strategy::LeadingText, budget, 0);
    let summary = suppress(ctx, &sel, true)?;
    let mut point = evaluate_summary::<R>(ctx, &summary, oracle, Strategy::LeadingText.name())?;
    point.rate = words;
    Ok(point)
}

/// The operational curve of a point set: for each distinct rate in ascending
/// order, the minimum distortion over all points at that rate or lower.
pub fn operational_curve<R: Real>(points: &[RDPoint<R>]) -> Result<OperationalCurve<R>> {
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut rates: Vec<u64> = points.iter().map(|p| p.rate).collect();
    rates.sort_unstable();
    rates.dedup();
    let mut steps = Vec::with_capacity(rates.len());
    for rate in rates {
        let best = points
            .iter()
            .filter(|p| p.rate <= rate)
            .map(|p| p.distortion)
            .fold(R::infinity(), |acc, d| if d < acc { d } else { acc });
        steps.push((rate, best));
    }
    Ok(OperationalCurve { steps })
}

/// CSV with header `method,rate_words,distortion`.
pub fn points_to_csv<R: Real>(points: &[RDPoint<R>]) -> String {
    let mut out = String::from("method,rate_words,distortion\n");
    for p in points {
        let _ = writeln!(out, "{},{},{}", p.method, p.rate, p.distortion);
    }
    out
}

pub fn curve_to_csv<R: Real>(curve: &OperationalCurve<R>) -> String {
    let mut out = String::from("rate_words,distortion\n");
    for (rate, distortion) in &curve.steps {
        let _ = writeln!(out, "{rate},{distortion}");
    }
    out
}
