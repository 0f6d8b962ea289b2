//! Document information measures over the orthogonalized atoms, the trace
//! relation, and the category of QAs. All logarithms are base 2; units are
//! bits.

use serde::Serialize;

use crate::category::QACategory;
use crate::error::{Error, Result};
use crate::pipeline::{DocumentContext, MergedPair};
use crate::scalar::{to_real, Real};

/// Every per-document measure, plus the inter-document ones when a pair was
/// supplied. Field order is the serialization order.
#[derive(Debug, Clone, Serialize)]
pub struct MeasureReport<R: Real> {
    pub ic: u64,
    pub id: R,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mi: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ig: Option<u64>,
    pub ce: R,
    pub ced: R,
    pub e0: R,
    pub e: R,
    pub e1: R,
}

/// Number of atomic orthogonal QA pairs associated with the document.
pub fn information_content(ctx: &DocumentContext) -> u64 {
    ctx.atoms().len() as u64
}

/// ID(D) = IC(D) / |D|, with |D| the whitespace token count.
pub fn information_density<R: Real>(ctx: &DocumentContext) -> Result<R> {
    if ctx.document.word_count == 0 {
        return Err(Error::ZeroLength);
    }
    Ok(to_real::<R>(information_content(ctx)) / to_real::<R>(ctx.document.word_count as u64))
}

/// Atomic orthogonal QAs in common between the documents, in the merged
/// category.
pub fn mutual_information(pair: &MergedPair) -> u64 {
    pair.mutual_information()
}

/// IG(D2; D1) = IC(D2) − IC(D1, D2).
pub fn information_gain(pair: &MergedPair) -> u64 {
    pair.information_gain_second_given_first()
}

/// log2 of the number of chains (heads) in the category.
pub fn content_entropy<R: Real>(category: &QACategory) -> Result<R> {
    if category.object_count() == 0 {
        return Err(Error::EmptyCategory);
    }
    let heads = category.chain_report().heads.len() as u64;
    Ok(to_real::<R>(heads).log2())
}

pub fn content_entropy_density<R: Real>(ctx: &DocumentContext) -> Result<R> {
    if ctx.document.word_count == 0 {
        return Err(Error::ZeroLength);
    }
    Ok(content_entropy::<R>(&ctx.category)? / to_real::<R>(ctx.document.word_count as u64))
}

/// The coding-procedure entropies over atom/node incidences from the trace.
///
/// With nᵢ the node count of atom i, N = Σnᵢ and pᵢ = nᵢ/N:
/// E0 codes all occurrences independently (Σ nᵢ·−log2 pᵢ), E codes each
/// unique atom once at its occurrence length (Σ −log2 pᵢ), and E1 codes the
/// unique atoms uniformly (U·log2 U, zero when U ≤ 1).
pub fn diversity_depth_entropy<R: Real>(ctx: &DocumentContext) -> Result<(R, R, R)> {
    let counts: Vec<u64> = ctx
        .atoms()
        .iter()
        .map(|atom| ctx.ortho.trace.nodes_of(&atom.id).len() as u64)
        .collect();
    entropy_family(&counts)
}

pub fn entropy_family<R: Real>(counts: &[u64]) -> Result<(R, R, R)> {
    if counts.is_empty() || counts.iter().any(|&n| n == 0) {
        return Err(Error::EmptyDocument);
    }
    let total: u64 = counts.iter().sum();
    let log_total = to_real::<R>(total).log2();
    let mut e0 = R::zero();
    let mut e = R::zero();
    for &n in counts {
        let code_len = log_total - to_real::<R>(n).log2(); // −log2 pᵢ
        e0 = e0 + to_real::<R>(n) * code_len;
        e = e + code_len;
    }
    let unique = counts.len() as u64;
    let e1 = if unique <= 1 { R::zero() } else { to_real::<R>(unique) * to_real::<R>(unique).log2() };
    Ok((e0, e, e1))
}

/// The full per-document report; `pair` adds the inter-document entries.
pub fn report<R: Real>(ctx: &DocumentContext, pair: Option<&MergedPair>) -> Result<MeasureReport<R>> {
    let (e0, e, e1) = diversity_depth_entropy(ctx)?;
    Ok(MeasureReport {
        ic: information_content(ctx),
        id: information_density(ctx)?,
        mi: pair.map(mutual_information),
        ig: pair.map(information_gain),
        ce: content_entropy(&ctx.category)?,
        ced: content_entropy_density(ctx)?,
        e0,
        e,
        e1,
    })
}
