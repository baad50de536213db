//! Exact top-K cosine retrieval over an expert gallery.
//!
//! Full scan with a bounded heap; ties broken by ascending item id so the
//! ranking is bitwise reproducible and equal to a full-sort oracle.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use crate::embedding::{dot, EmbeddingVector, ExpertIndex};
use crate::error::{Error, Result};

/// One ranked retrieval.
#[derive(Debug, Clone)]
pub struct SupportEntry {
    /// 1-based rank.
    pub rank: usize,
    pub item_id: u64,
    pub embedding: EmbeddingVector,
    pub similarity: f64,
}

/// The top-K retrievals one expert returns for one query, best first.
#[derive(Debug, Clone)]
pub struct SupportSet {
    pub expert_id: usize,
    pub query_id: u64,
    pub entries: Vec<SupportEntry>,
}

impl SupportSet {
    pub fn k(&self) -> usize {
        self.entries.len()
    }

    pub fn item_ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.entries.iter().map(|e| e.item_id)
    }

    pub fn item_id_set(&self) -> HashSet<u64> {
        self.item_ids().collect()
    }
}

// Heap candidate ordered worst-first: lower similarity is "greater", and on
// equal similarity a larger item_id is "greater". The heap top is therefore
// always the entry that drops out next.
struct Candidate {
    similarity: f64,
    item_id: u64,
    index: usize,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.similarity == other.similarity && self.item_id == other.item_id
    }
}
impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .similarity
            .total_cmp(&self.similarity)
            .then(self.item_id.cmp(&other.item_id))
    }
}
impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Returns the K gallery items most cosine-similar to the query, excluding
/// `exclude_ids`, ordered by (similarity descending, item_id ascending).
pub fn retrieve_top_k(
    index: &ExpertIndex,
    query_id: u64,
    query_embedding: &EmbeddingVector,
    k: usize,
    exclude_ids: &HashSet<u64>,
) -> Result<SupportSet> {
    if query_embedding.dim() != index.dimension() {
        return Err(Error::DimensionMismatch {
            expected: index.dimension(),
            actual: query_embedding.dim(),
        });
    }
    if k == 0 {
        return Err(Error::InvalidConfig("k must be positive".into()));
    }
    let eligible = index
        .items()
        .iter()
        .filter(|it| !exclude_ids.contains(&it.item_id))
        .count();
    if eligible < k {
        return Err(Error::InsufficientGallery {
            requested: k,
            eligible,
        });
    }

    let q = query_embedding.values();
    let mut heap: BinaryHeap<Candidate> = BinaryHeap::with_capacity(k + 1);
    for (index_pos, item) in index.items().iter().enumerate() {
        if exclude_ids.contains(&item.item_id) {
            continue;
        }
        let similarity = dot(q, item.embedding.values()).clamp(-1.0, 1.0);
        heap.push(Candidate {
            similarity,
            item_id: item.item_id,
            index: index_pos,
        });
        if heap.len() > k {
            heap.pop();
        }
    }

    let mut kept: Vec<Candidate> = heap.into_vec();
    kept.sort_by(|a, b| {
        b.similarity
            .total_cmp(&a.similarity)
            .then(a.item_id.cmp(&b.item_id))
    });

    let entries = kept
        .into_iter()
        .enumerate()
        .map(|(i, c)| SupportEntry {
            rank: i + 1,
            item_id: c.item_id,
            embedding: index.items()[c.index].embedding.clone(),
            similarity: c.similarity,
        })
        .collect();

    Ok(SupportSet {
        expert_id: index.expert_id(),
        query_id,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::{normalize, GalleryItem};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn tiny_index() -> ExpertIndex {
        let items = vec![
            GalleryItem {
                item_id: 0,
                identity_id: 0,
                embedding: normalize(&[1.0, 0.0]).unwrap(),
            },
            GalleryItem {
                item_id: 1,
                identity_id: 1,
                embedding: normalize(&[0.0, 1.0]).unwrap(),
            },
            GalleryItem {
                item_id: 2,
                identity_id: 2,
                embedding: normalize(&[-1.0, 0.0]).unwrap(),
            },
        ];
        ExpertIndex::new(0, 2, items).unwrap()
    }

    #[test]
    fn hand_case_top2() {
        let index = tiny_index();
        let q = normalize(&[1.0, 0.0]).unwrap();
        let s = retrieve_top_k(&index, 7, &q, 2, &HashSet::new()).unwrap();
        assert_eq!(s.query_id, 7);
        assert_eq!(s.entries[0].item_id, 0);
        assert_eq!(s.entries[0].similarity, 1.0);
        assert_eq!(s.entries[0].rank, 1);
        assert_eq!(s.entries[1].item_id, 1);
        assert_eq!(s.entries[1].similarity, 0.0);
    }

    #[test]
    fn exclusion_forces_next_best() {
        let index = tiny_index();
        let q = normalize(&[1.0, 0.0]).unwrap();
        let excl: HashSet<u64> = [0].into_iter().collect();
        let s = retrieve_top_k(&index, 0, &q, 1, &excl).unwrap();
        assert_eq!(s.entries[0].item_id, 1);
        assert_eq!(s.entries[0].similarity, 0.0);
    }

    #[test]
    fn insufficient_gallery() {
        let index = tiny_index();
        let q = normalize(&[1.0, 0.0]).unwrap();
        assert!(matches!(
            retrieve_top_k(&index, 0, &q, 4, &HashSet::new()),
            Err(Error::InsufficientGallery { .. })
        ));
        let excl: HashSet<u64> = [0, 1].into_iter().collect();
        assert!(matches!(
            retrieve_top_k(&index, 0, &q, 2, &excl),
            Err(Error::InsufficientGallery {
                requested: 2,
                eligible: 1
            })
        ));
    }

    #[test]
    fn dimension_mismatch() {
        let index = tiny_index();
        let q = normalize(&[1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(
            retrieve_top_k(&index, 0, &q, 1, &HashSet::new()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    /// Independent oracle: sort every eligible item by (-similarity, item_id)
    /// and take the first k.
    fn full_sort_oracle(
        index: &ExpertIndex,
        q: &EmbeddingVector,
        k: usize,
        exclude: &HashSet<u64>,
    ) -> Vec<(u64, f64)> {
        let mut all: Vec<(u64, f64)> = index
            .items()
            .iter()
            .filter(|it| !exclude.contains(&it.item_id))
            .map(|it| {
                (
                    it.item_id,
                    crate::embedding::cosine_similarity(q, &it.embedding).unwrap(),
                )
            })
            .collect();
        all.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        all.truncate(k);
        all
    }

    fn random_index(rng: &mut StdRng, n: usize, dim: usize) -> ExpertIndex {
        let items = (0..n)
            .map(|i| GalleryItem {
                item_id: i as u64,
                identity_id: (i % 10) as u64,
                embedding: normalize(
                    &(0..dim)
                        .map(|_| rng.random_range(-1.0..1.0))
                        .collect::<Vec<_>>(),
                )
                .unwrap(),
            })
            .collect();
        ExpertIndex::new(0, dim, items).unwrap()
    }

    #[test]
    fn matches_full_sort_oracle() {
        let mut rng = StdRng::seed_from_u64(40);
        let index = random_index(&mut rng, 500, 16);
        for qi in 0..100 {
            let q = normalize(
                &(0..16)
                    .map(|_| rng.random_range(-1.0..1.0))
                    .collect::<Vec<_>>(),
            )
            .unwrap();
            let got = retrieve_top_k(&index, qi, &q, 15, &HashSet::new()).unwrap();
            let want = full_sort_oracle(&index, &q, 15, &HashSet::new());
            let got_pairs: Vec<(u64, f64)> = got
                .entries
                .iter()
                .map(|e| (e.item_id, e.similarity))
                .collect();
            assert_eq!(got_pairs, want, "exact match with full-sort oracle");
        }
    }

    #[test]
    fn ties_break_by_ascending_item_id() {
        // Duplicate embeddings force exact similarity ties.
        let e = normalize(&[1.0, 1.0]).unwrap();
        let items = (0..5)
            .map(|i| GalleryItem {
                item_id: 10 - i as u64, // inserted out of order on purpose
                identity_id: 0,
                embedding: e.clone(),
            })
            .collect();
        let index = ExpertIndex::new(0, 2, items).unwrap();
        let s = retrieve_top_k(&index, 0, &e, 3, &HashSet::new()).unwrap();
        let ids: Vec<u64> = s.item_ids().collect();
        assert_eq!(ids, vec![6, 7, 8]);
    }

    #[test]
    fn monotone_prefix_property() {
        let mut rng = StdRng::seed_from_u64(41);
        let index = random_index(&mut rng, 120, 8);
        for qi in 0..20 {
            let q = normalize(
                &(0..8)
                    .map(|_| rng.random_range(-1.0..1.0))
                    .collect::<Vec<_>>(),
            )
            .unwrap();
            let big = retrieve_top_k(&index, qi, &q, 10, &HashSet::new()).unwrap();
            for k in 1..10 {
                let small = retrieve_top_k(&index, qi, &q, k, &HashSet::new()).unwrap();
                let prefix: Vec<u64> = big.item_ids().take(k).collect();
                let ids: Vec<u64> = small.item_ids().collect();
                assert_eq!(ids, prefix, "top-{k} must be a prefix of top-10");
            }
        }
    }

    #[test]
    fn exclusions_never_returned() {
        let mut rng = StdRng::seed_from_u64(42);
        let index = random_index(&mut rng, 60, 4);
        for qi in 0..20 {
            let q = normalize(
                &(0..4)
                    .map(|_| rng.random_range(-1.0..1.0))
                    .collect::<Vec<_>>(),
            )
            .unwrap();
            let exclude: HashSet<u64> = (0..20).map(|_| rng.random_range(0..60u64)).collect();
            let s = retrieve_top_k(&index, qi, &q, 10, &exclude).unwrap();
            assert!(s.item_ids().all(|id| !exclude.contains(&id)));
            let want = full_sort_oracle(&index, &q, 10, &exclude);
            let got: Vec<(u64, f64)> = s
                .entries
                .iter()
                .map(|e| (e.item_id, e.similarity))
                .collect();
            assert_eq!(got, want);
        }
    }
}
