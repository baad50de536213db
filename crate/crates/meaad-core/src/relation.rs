//! Per-query relation statistics: the three scalar summaries whose benign
//! and adversarial distributions separate (mean query-support similarity,
//! mean support-support similarity, common support count across experts).

use crate::embedding::{ExpertIndex, QueryLabel, QuerySample};
use crate::error::Result;
use crate::features::{query_support_affinity, retrieve_supports, support_support_affinity};
use crate::parallel;

/// Scalar relation summary of one query.
#[derive(Debug, Clone)]
pub struct RelationStats {
    pub query_id: u64,
    pub label: QueryLabel,
    /// Mean query-support cosine over all experts and ranks.
    pub query_support_mean: f64,
    /// Mean pairwise support cosine; absent when K = 1.
    pub support_support_mean: Option<f64>,
    /// Size of the intersection of all experts' support id sets; absent for
    /// a single expert.
    pub common_count: Option<usize>,
}

/// Computes relation statistics for every query.
pub fn relation_stats(
    queries: &[QuerySample],
    indexes: &[ExpertIndex],
    k: usize,
) -> Result<Vec<RelationStats>> {
    parallel::map(queries, |query| single_query_stats(query, indexes, k))
        .into_iter()
        .collect()
}

fn single_query_stats(
    query: &QuerySample,
    indexes: &[ExpertIndex],
    k: usize,
) -> Result<RelationStats> {
    let supports = retrieve_supports(query, indexes, k)?;

    let mut qs_sum = 0.0;
    let mut qs_count = 0usize;
    for (i, support) in supports.iter().enumerate() {
        for v in query_support_affinity(query.embedding(i), support)? {
            qs_sum += v;
            qs_count += 1;
        }
    }
    let query_support_mean = qs_sum / qs_count as f64;

    let support_support_mean = if k >= 2 {
        let mut ss_sum = 0.0;
        let mut ss_count = 0usize;
        for support in &supports {
            for v in support_support_affinity(support)? {
                ss_sum += v;
                ss_count += 1;
            }
        }
        Some(ss_sum / ss_count as f64)
    } else {
        None
    };

    let common_count = if supports.len() >= 2 {
        let mut common = supports[0].item_id_set();
        for s in &supports[1..] {
            let ids = s.item_id_set();
            common.retain(|id| ids.contains(id));
        }
        Some(common.len())
    } else {
        None
    };

    Ok(RelationStats {
        query_id: query.query_id,
        label: query.label,
        query_support_mean,
        support_support_mean,
        common_count,
    })
}
