//! Context features built from multi-expert retrieval results.
//!
//! Three affinity families describe how "tidy" a query's retrievals are:
//!
//! * query-support: per-rank cosine similarity between the query embedding
//!   and each support sample, one K-vector per expert;
//! * support-support: the strict upper triangle (row-major, i < j) of the
//!   K x K pairwise cosine matrix among support samples, one K(K-1)/2-vector
//!   per expert;
//! * cross-expert: for each expert's j-th support sample, the fraction of
//!   the other experts whose support sets also contain it, an N x K matrix.
//!
//! The flat feature concatenates all query-support blocks, then all
//! support-support blocks, then the cross-expert rows, each in expert order.
//! Structurally absent blocks (single expert, K = 1) are omitted rather than
//! zero-filled, so the flat dimension is
//! `N*K + N*K(K-1)/2 + N*K` with those degenerate reductions.

use std::collections::HashSet;

use crate::embedding::{cosine_similarity, EmbeddingVector, ExpertIndex, QuerySample};
use crate::error::{Error, Result};
use crate::retrieval::{retrieve_top_k, SupportSet};

/// The assembled context feature of one query, with block provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextFeature {
    pub n_experts: usize,
    pub support_size: usize,
    /// All experts' query-support vectors, concatenated in expert order.
    pub query_support: Vec<f64>,
    /// All experts' upper-triangle support-support vectors, in expert order.
    pub support_support: Vec<f64>,
    /// Cross-expert agreement matrix, rows concatenated in expert order.
    pub cross_expert: Vec<f64>,
}

impl ContextFeature {
    pub fn dim(&self) -> usize {
        self.query_support.len() + self.support_support.len() + self.cross_expert.len()
    }

    /// Concatenation [query-support | support-support | cross-expert].
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim());
        out.extend_from_slice(&self.query_support);
        out.extend_from_slice(&self.support_support);
        out.extend_from_slice(&self.cross_expert);
        out
    }

    /// Wraps a flat vector whose block structure is no longer meaningful,
    /// for example a sliced feature subset. Detection code only consumes
    /// [`ContextFeature::flat`], so provenance-free features train fine.
    pub fn opaque(values: Vec<f64>) -> Self {
        Self {
            n_experts: 0,
            support_size: 0,
            query_support: values,
            support_support: Vec::new(),
            cross_expert: Vec::new(),
        }
    }

    /// Splits a flat vector back into blocks using the dimension law.
    pub fn from_flat(n_experts: usize, support_size: usize, flat: &[f64]) -> Result<Self> {
        let (qs, ss, ce) = block_dims(n_experts, support_size);
        if flat.len() != qs + ss + ce {
            return Err(Error::DimensionMismatch {
                expected: qs + ss + ce,
                actual: flat.len(),
            });
        }
        Ok(Self {
            n_experts,
            support_size,
            query_support: flat[..qs].to_vec(),
            support_support: flat[qs..qs + ss].to_vec(),
            cross_expert: flat[qs + ss..].to_vec(),
        })
    }
}

/// Block sizes (query-support, support-support, cross-expert) for a
/// configuration, with the degenerate omissions: no support-support block at
/// K = 1, no cross-expert block with a single expert.
pub fn block_dims(n_experts: usize, k: usize) -> (usize, usize, usize) {
    let qs = n_experts * k;
    let ss = n_experts * (k * (k - 1) / 2);
    let ce = if n_experts >= 2 { n_experts * k } else { 0 };
    (qs, ss, ce)
}

/// Flat feature dimension for a configuration.
pub fn feature_dim(n_experts: usize, k: usize) -> usize {
    let (qs, ss, ce) = block_dims(n_experts, k);
    qs + ss + ce
}

/// Which affinity blocks to keep; used by the feature-subset ablation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureSubset {
    pub query_support: bool,
    pub support_support: bool,
    pub cross_expert: bool,
}

impl FeatureSubset {
    pub const ALL: FeatureSubset = FeatureSubset {
        query_support: true,
        support_support: true,
        cross_expert: true,
    };

    /// Concatenates the selected blocks, preserving the canonical order.
    pub fn select(&self, feature: &ContextFeature) -> Vec<f64> {
        let mut out = Vec::new();
        if self.query_support {
            out.extend_from_slice(&feature.query_support);
        }
        if self.support_support {
            out.extend_from_slice(&feature.support_support);
        }
        if self.cross_expert {
            out.extend_from_slice(&feature.cross_expert);
        }
        out
    }

    pub fn name(&self) -> String {
        let mut parts = Vec::new();
        if self.query_support {
            parts.push("qs");
        }
        if self.support_support {
            parts.push("ss");
        }
        if self.cross_expert {
            parts.push("ce");
        }
        if parts.is_empty() {
            "none".to_string()
        } else {
            parts.join("+")
        }
    }
}

/// Cosine similarity between the query embedding and each support sample, in
/// rank order.
pub fn query_support_affinity(
    query_embedding: &EmbeddingVector,
    support: &SupportSet,
) -> Result<Vec<f64>> {
    support
        .entries
        .iter()
        .map(|e| cosine_similarity(query_embedding, &e.embedding))
        .collect()
}

/// Strict upper triangle (row-major, i < j) of the pairwise cosine matrix
/// among the support samples. Empty when K = 1.
pub fn support_support_affinity(support: &SupportSet) -> Result<Vec<f64>> {
    let k = support.k();
    let mut out = Vec::with_capacity(k * (k - 1) / 2);
    for i in 0..k {
        for j in (i + 1)..k {
            out.push(cosine_similarity(
                &support.entries[i].embedding,
                &support.entries[j].embedding,
            )?);
        }
    }
    Ok(out)
}

/// For each expert i and rank j, the fraction of the other experts whose
/// support sets contain the item at (i, j). Membership is tested on item id.
///
/// Returns an N x K row-major matrix; errors with `SingleExpert` when only
/// one support set is provided.
pub fn cross_expert_affinity(supports: &[SupportSet]) -> Result<Vec<Vec<f64>>> {
    let n = supports.len();
    if n < 2 {
        return Err(Error::SingleExpert);
    }
    let k = supports[0].k();
    for s in supports {
        if s.k() != k {
            return Err(Error::MismatchedSupportSizes(k, s.k()));
        }
    }
    let id_sets: Vec<HashSet<u64>> = supports.iter().map(|s| s.item_id_set()).collect();
    let mut rows = Vec::with_capacity(n);
    for (i, support) in supports.iter().enumerate() {
        let mut row = Vec::with_capacity(k);
        for entry in &support.entries {
            let count = id_sets
                .iter()
                .enumerate()
                .filter(|(l, set)| *l != i && set.contains(&entry.item_id))
                .count();
            row.push(count as f64 / (n - 1) as f64);
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Retrieves each expert's support set for the query. No gallery exclusions
/// are applied; queries are expected to be held out of the galleries.
pub fn retrieve_supports(
    query: &QuerySample,
    indexes: &[ExpertIndex],
    k: usize,
) -> Result<Vec<SupportSet>> {
    if query.n_experts() != indexes.len() {
        return Err(Error::DimensionMismatch {
            expected: indexes.len(),
            actual: query.n_experts(),
        });
    }
    let no_exclusions = HashSet::new();
    indexes
        .iter()
        .enumerate()
        .map(|(i, index)| {
            retrieve_top_k(index, query.query_id, query.embedding(i), k, &no_exclusions)
        })
        .collect()
}

/// Runs retrieval for every expert and assembles the full context feature.
pub fn assemble_context_feature(
    query: &QuerySample,
    indexes: &[ExpertIndex],
    k: usize,
) -> Result<ContextFeature> {
    let supports = retrieve_supports(query, indexes, k)?;
    assemble_from_supports(query, &supports)
}

/// Assembles the context feature from already-retrieved support sets.
pub fn assemble_from_supports(
    query: &QuerySample,
    supports: &[SupportSet],
) -> Result<ContextFeature> {
    let n = supports.len();
    if n == 0 {
        return Err(Error::Empty);
    }
    let k = supports[0].k();

    let mut query_support = Vec::with_capacity(n * k);
    for (i, support) in supports.iter().enumerate() {
        if support.k() != k {
            return Err(Error::MismatchedSupportSizes(k, support.k()));
        }
        query_support.extend(query_support_affinity(query.embedding(i), support)?);
    }

    let mut support_support = Vec::with_capacity(n * (k * (k - 1) / 2));
    for support in supports {
        support_support.extend(support_support_affinity(support)?);
    }

    let cross_expert = if n >= 2 {
        cross_expert_affinity(supports)?.concat()
    } else {
        Vec::new()
    };

    Ok(ContextFeature {
        n_experts: n,
        support_size: k,
        query_support,
        support_support,
        cross_expert,
    })
}
