//! Synthetic gallery and query generation.
//!
//! Each identity gets one base direction on the unit sphere. A gallery item
//! perturbs the base with item-level noise (shared across experts) plus
//! per-expert jitter, then renormalizes; queries are drawn the same way from
//! a held-out slice, so they never collide with gallery item ids. All draws
//! come from one seeded stream in a fixed order (identity bases, then
//! gallery items, then queries), making generation bitwise reproducible.

use rand::rngs::StdRng;
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};

use crate::embedding::{
    normalize, EmbeddingVector, ExpertIndex, GalleryItem, QueryLabel, QuerySample,
};
use crate::error::{Error, Result};

/// Shape of a synthetic scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioConfig {
    pub n_identities: usize,
    pub items_per_identity: usize,
    pub n_experts: usize,
    pub dimension: usize,
    /// Std-dev of the item-level perturbation applied before renormalizing.
    pub cluster_noise: f64,
    /// Std-dev of the per-expert perturbation; 0 makes experts agree exactly.
    pub cross_expert_jitter: f64,
    /// Benign queries drawn per identity.
    pub queries_per_identity: usize,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            n_identities: 50,
            items_per_identity: 20,
            n_experts: 4,
            dimension: 128,
            cluster_noise: 0.05,
            cross_expert_jitter: 0.02,
            queries_per_identity: 50,
            seed: 7,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_identities == 0 || self.items_per_identity == 0 || self.n_experts == 0 {
            return Err(Error::InvalidConfig(
                "identities, items per identity, and experts must be positive".into(),
            ));
        }
        if self.dimension < 2 {
            return Err(Error::InvalidConfig("dimension must be at least 2".into()));
        }
        if !(self.cluster_noise.is_finite() && self.cluster_noise >= 0.0) {
            return Err(Error::InvalidConfig(
                "cluster_noise must be finite and >= 0".into(),
            ));
        }
        if !(self.cross_expert_jitter.is_finite() && self.cross_expert_jitter >= 0.0) {
            return Err(Error::InvalidConfig(
                "cross_expert_jitter must be finite and >= 0".into(),
            ));
        }
        Ok(())
    }
}

fn draw_vector(rng: &mut StdRng, normal: &Normal<f64>, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| normal.sample(rng)).collect()
}

fn perturbed_embedding(
    base: &[f64],
    item_noise: &[f64],
    expert_noise: &[f64],
    sigma: f64,
    tau: f64,
) -> Result<EmbeddingVector> {
    let v: Vec<f64> = base
        .iter()
        .zip(item_noise)
        .zip(expert_noise)
        .map(|((b, i), e)| b + sigma * i + tau * e)
        .collect();
    normalize(&v)
}

/// Generates the expert galleries and the benign query set.
///
/// Item ids are `identity * items_per_identity + item` and are shared across
/// experts; that shared id space is what cross-expert membership tests use.
pub fn generate_scenario(config: &ScenarioConfig) -> Result<(Vec<ExpertIndex>, Vec<QuerySample>)> {
    config.validate()?;
    let mut rng = StdRng::seed_from_u64(config.seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let dim = config.dimension;
    let sigma = config.cluster_noise;
    let tau = config.cross_expert_jitter;

    // Identity bases. Renormalizing a standard normal draw is rotation
    // invariant, so bases are uniform on the sphere.
    let mut bases = Vec::with_capacity(config.n_identities);
    for _ in 0..config.n_identities {
        loop {
            let v = draw_vector(&mut rng, &normal, dim);
            if let Ok(e) = normalize(&v) {
                bases.push(e);
                break;
            }
        }
    }

    // Gallery items. Noise draws happen even when sigma or tau is zero, so
    // changing either knob never shifts the rest of the stream.
    let mut per_expert_items: Vec<Vec<GalleryItem>> =
        vec![Vec::with_capacity(config.n_identities * config.items_per_identity); config.n_experts];
    for (identity, base) in bases.iter().enumerate() {
        for item in 0..config.items_per_identity {
            let item_id = (identity * config.items_per_identity + item) as u64;
            let item_noise = draw_vector(&mut rng, &normal, dim);
            for expert_items in per_expert_items.iter_mut() {
                let expert_noise = draw_vector(&mut rng, &normal, dim);
                let embedding =
                    perturbed_embedding(base.values(), &item_noise, &expert_noise, sigma, tau)?;
                expert_items.push(GalleryItem {
                    item_id,
                    identity_id: identity as u64,
                    embedding,
                });
            }
        }
    }
    let indexes: Vec<ExpertIndex> = per_expert_items
        .into_iter()
        .enumerate()
        .map(|(expert_id, items)| ExpertIndex::new(expert_id, dim, items))
        .collect::<Result<_>>()?;

    // Held-out benign queries, drawn exactly like gallery items.
    let mut queries = Vec::with_capacity(config.n_identities * config.queries_per_identity);
    let mut query_id = 0u64;
    for (identity, base) in bases.iter().enumerate() {
        for _ in 0..config.queries_per_identity {
            let item_noise = draw_vector(&mut rng, &normal, dim);
            let mut embeddings = Vec::with_capacity(config.n_experts);
            for _ in 0..config.n_experts {
                let expert_noise = draw_vector(&mut rng, &normal, dim);
                embeddings.push(perturbed_embedding(
                    base.values(),
                    &item_noise,
                    &expert_noise,
                    sigma,
                    tau,
                )?);
            }
            queries.push(QuerySample::new(
                query_id,
                identity as u64,
                QueryLabel::Benign,
                embeddings,
            )?);
            query_id += 1;
        }
    }

    Ok((indexes, queries))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::cosine_similarity;
    use crate::features::query_support_affinity;
    use crate::retrieval::retrieve_top_k;
    use std::collections::HashSet;

    fn small_config() -> ScenarioConfig {
        ScenarioConfig {
            n_identities: 6,
            items_per_identity: 8,
            n_experts: 3,
            dimension: 16,
            cluster_noise: 0.05,
            cross_expert_jitter: 0.02,
            queries_per_identity: 4,
            seed: 9,
        }
    }

    #[test]
    fn degenerate_noise_collapses_identities() {
        let config = ScenarioConfig {
            cluster_noise: 0.0,
            cross_expert_jitter: 0.0,
            ..small_config()
        };
        let (indexes, queries) = generate_scenario(&config).unwrap();

        // All items of one identity are identical across items and experts.
        let first = &indexes[0].items()[0];
        for index in &indexes {
            for item in index.items().iter().filter(|it| it.identity_id == 0) {
                assert_eq!(item.embedding, first.embedding);
            }
        }

        // A benign query retrieves only its own identity at similarity 1.
        let q = &queries[0];
        let s =
            retrieve_top_k(&indexes[0], q.query_id, q.embedding(0), 5, &HashSet::new()).unwrap();
        let affinity = query_support_affinity(q.embedding(0), &s).unwrap();
        for v in affinity {
            assert!((v - 1.0).abs() < 1e-12, "query-support mean 1.0");
        }
        for entry in &s.entries {
            assert_eq!(
                indexes[0].get(entry.item_id).unwrap().identity_id,
                q.identity_id
            );
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let config = small_config();
        let (a_idx, a_q) = generate_scenario(&config).unwrap();
        let (b_idx, b_q) = generate_scenario(&config).unwrap();
        for (a, b) in a_idx.iter().zip(&b_idx) {
            assert_eq!(a.items().len(), b.items().len());
            for (x, y) in a.items().iter().zip(b.items()) {
                assert_eq!(x.embedding, y.embedding, "bitwise identical galleries");
            }
        }
        for (x, y) in a_q.iter().zip(&b_q) {
            assert_eq!(x.embeddings(), y.embeddings());
        }
    }

    #[test]
    fn different_seed_changes_galleries() {
        let (a_idx, _) = generate_scenario(&small_config()).unwrap();
        let config = ScenarioConfig {
            seed: 10,
            ..small_config()
        };
        let (b_idx, _) = generate_scenario(&config).unwrap();
        assert_ne!(a_idx[0].items()[0].embedding, b_idx[0].items()[0].embedding);
    }

    #[test]
    fn queries_cluster_near_their_identity() {
        let (indexes, queries) = generate_scenario(&small_config()).unwrap();
        for q in queries.iter().take(8) {
            // Same-identity gallery items should be much closer than average.
            let idx = &indexes[0];
            let own: Vec<f64> = idx
                .items()
                .iter()
                .filter(|it| it.identity_id == q.identity_id)
                .map(|it| cosine_similarity(q.embedding(0), &it.embedding).unwrap())
                .collect();
            let own_mean = own.iter().sum::<f64>() / own.len() as f64;
            assert!(own_mean > 0.9, "tight clusters at sigma 0.05");
        }
    }

    #[test]
    fn invalid_configs_rejected() {
        let bad = ScenarioConfig {
            n_identities: 0,
            ..small_config()
        };
        assert!(matches!(
            generate_scenario(&bad),
            Err(Error::InvalidConfig(_))
        ));

        let bad = ScenarioConfig {
            cluster_noise: f64::NAN,
            ..small_config()
        };
        assert!(matches!(
            generate_scenario(&bad),
            Err(Error::InvalidConfig(_))
        ));
    }
}
