//! Embedding-space attacks on query samples.
//!
//! All attacks perturb only the per-expert query embeddings, never the
//! galleries. Outputs stay unit-norm and within the chordal epsilon-ball of
//! the original embedding: after each step the candidate is renormalized and
//! then projected onto the spherical cap around the original whose chord
//! radius is epsilon.
//!
//! Each query derives its own RNG seed from the attack seed and the query
//! id, so attacking a batch is deterministic no matter how the batch is
//! ordered or scheduled.

use rand::rngs::StdRng;
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};

use crate::detector::DetectorModel;
use crate::embedding::{
    dot, from_unit_values, normalize, EmbeddingVector, ExpertIndex, QueryLabel, QuerySample,
};
use crate::error::{Error, Result};
use crate::features::feature_dim;
use crate::parallel;
use crate::retrieval::retrieve_top_k;
use std::collections::HashSet;

/// Attack family selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttackKind {
    Naive,
    Adaptive,
    Targeted,
}

impl AttackKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            AttackKind::Naive => "naive",
            AttackKind::Adaptive => "adaptive",
            AttackKind::Targeted => "targeted",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "naive" => Some(AttackKind::Naive),
            "adaptive" => Some(AttackKind::Adaptive),
            "targeted" => Some(AttackKind::Targeted),
            _ => None,
        }
    }
}

/// Attack knobs. `epsilon` is the maximum chordal perturbation of each
/// query embedding; `affinity_weight` scales the affinity-preserving loss
/// term of the adaptive attack; `refresh_every` controls how often the
/// adaptive attack re-retrieves its support sets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackConfig {
    pub kind: AttackKind,
    pub epsilon: f64,
    pub steps: usize,
    pub step_size: f64,
    pub affinity_weight: f64,
    pub refresh_every: usize,
    pub target_identity: Option<u64>,
    pub seed: u64,
}

impl Default for AttackConfig {
    fn default() -> Self {
        Self {
            kind: AttackKind::Naive,
            epsilon: 0.8,
            steps: 50,
            step_size: 0.1,
            affinity_weight: 1.0,
            refresh_every: 5,
            target_identity: None,
            seed: 7,
        }
    }
}

impl AttackConfig {
    fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(Error::InvalidConfig(
                "epsilon must be finite and >= 0".into(),
            ));
        }
        if !(self.step_size.is_finite() && self.step_size > 0.0) {
            return Err(Error::InvalidConfig("step_size must be positive".into()));
        }
        if !(self.affinity_weight.is_finite() && self.affinity_weight >= 0.0) {
            return Err(Error::InvalidConfig(
                "affinity_weight must be finite and >= 0".into(),
            ));
        }
        if self.refresh_every == 0 {
            return Err(Error::InvalidConfig(
                "refresh_every must be positive".into(),
            ));
        }
        Ok(())
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Per-query seed, independent of batch order.
fn per_query_seed(base: u64, query_id: u64) -> u64 {
    splitmix64(base ^ splitmix64(query_id))
}

/// A unit vector orthogonal to `u`, chosen deterministically.
fn deterministic_perp(u: &[f64]) -> Vec<f64> {
    // Start from the basis vector where u is smallest, then orthogonalize.
    let axis = u
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let mut v: Vec<f64> = u.iter().map(|&ui| -u[axis] * ui).collect();
    v[axis] += 1.0;
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    v
}

fn renormalize_or_perp(original: &[f64], moved: Vec<f64>) -> Vec<f64> {
    let norm = moved.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm < 1e-12 {
        deterministic_perp(original)
    } else {
        moved.into_iter().map(|x| x / norm).collect()
    }
}

/// Projects a unit candidate onto the spherical cap of chordal radius
/// `epsilon` around the unit vector `original`. A chord of `epsilon`
/// corresponds to a cosine of `1 - epsilon^2 / 2`; candidates inside the cap
/// pass through unchanged and `epsilon >= 2` disables the constraint.
fn project_to_cap(original: &[f64], candidate: Vec<f64>, epsilon: f64) -> Vec<f64> {
    let cos_cap = 1.0 - epsilon * epsilon / 2.0;
    let c = dot(original, &candidate);
    if c >= cos_cap {
        return candidate;
    }
    // Rotate toward the original in their common plane until the cap edge.
    let mut tangent: Vec<f64> = candidate
        .iter()
        .zip(original)
        .map(|(x, o)| x - c * o)
        .collect();
    let tnorm = tangent.iter().map(|x| x * x).sum::<f64>().sqrt();
    if tnorm < 1e-12 {
        tangent = deterministic_perp(original);
    } else {
        tangent.iter_mut().for_each(|x| *x /= tnorm);
    }
    let sin_cap = (1.0 - cos_cap * cos_cap).max(0.0).sqrt();
    original
        .iter()
        .zip(&tangent)
        .map(|(o, t)| cos_cap * o + sin_cap * t)
        .collect()
}

/// Moves `q` a distance `epsilon` along `direction`, renormalizes, and caps
/// the result to the epsilon-ball around `q`.
pub(crate) fn perturb_channel(q: &[f64], direction: &[f64], epsilon: f64) -> Vec<f64> {
    if epsilon == 0.0 {
        return q.to_vec();
    }
    let moved: Vec<f64> = q
        .iter()
        .zip(direction)
        .map(|(x, d)| x + epsilon * d)
        .collect();
    let unit = renormalize_or_perp(q, moved);
    project_to_cap(q, unit, epsilon)
}

// Attack iterates keep unit norm by construction; wrapping without
// renormalizing keeps zero-step attacks bitwise equal to their input.
fn embedding_from_values(values: Vec<f64>) -> Result<EmbeddingVector> {
    from_unit_values(&values)
}

/// Perturbs each expert channel independently toward its own random unit
/// direction. Channel independence is what breaks cross-expert agreement.
pub fn naive_attack(query: &QuerySample, config: &AttackConfig) -> Result<QuerySample> {
    config.validate()?;
    let mut rng = StdRng::seed_from_u64(per_query_seed(config.seed, query.query_id));
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let dim = query.dim();

    let mut out = query.clone().with_label(QueryLabel::Adversarial);
    if config.epsilon == 0.0 {
        return Ok(out);
    }
    for channel in 0..query.n_experts() {
        let direction = loop {
            let v: Vec<f64> = (0..dim).map(|_| normal.sample(&mut rng)).collect();
            if let Ok(e) = normalize(&v) {
                break e;
            }
        };
        let q = query.embedding(channel).values();
        let perturbed = perturb_channel(q, direction.values(), config.epsilon);
        out = out.with_embedding(channel, embedding_from_values(perturbed)?);
    }
    Ok(out)
}

/// Applies [`naive_attack`] to every query; per-query seeds keep the result
/// independent of scheduling.
pub fn naive_attack_all(
    queries: &[QuerySample],
    config: &AttackConfig,
) -> Result<Vec<QuerySample>> {
    parallel::map(queries, |q| naive_attack(q, config))
        .into_iter()
        .collect()
}

// Smooth per-channel loss of the adaptive attack, with the support set held
// fixed: (summed similarity to true-identity items) minus affinity_weight
// times (summed query-support affinity). Both terms are sums over gallery
// items so they live on the same scale; a mean-scaled misranking term is
// drowned out by the K-term affinity sum and the optimum degenerates to not
// attacking at all. Support-support and cross-expert terms are constant in
// the query between support refreshes, so they steer only through
// re-retrieval.
#[cfg(test)]
fn adaptive_smooth_loss(q: &[f64], true_sum: &[f64], support_sum: &[f64], weight: f64) -> f64 {
    dot(q, true_sum) - weight * dot(q, support_sum)
}

fn adaptive_gradient(true_sum: &[f64], support_sum: &[f64], weight: f64) -> Vec<f64> {
    true_sum
        .iter()
        .zip(support_sum)
        .map(|(m, s)| m - weight * s)
        .collect()
}

fn identity_embedding_sum(index: &ExpertIndex, identity: u64) -> Option<Vec<f64>> {
    let mut sum = vec![0.0; index.dimension()];
    let mut count = 0usize;
    for item in index.items().iter().filter(|it| it.identity_id == identity) {
        for (s, v) in sum.iter_mut().zip(item.embedding.values()) {
            *s += v;
        }
        count += 1;
    }
    if count == 0 {
        return None;
    }
    Some(sum)
}

fn identity_mean(index: &ExpertIndex, identity: u64) -> Option<Vec<f64>> {
    let count = index
        .items()
        .iter()
        .filter(|it| it.identity_id == identity)
        .count();
    identity_embedding_sum(index, identity).map(|mut sum| {
        sum.iter_mut().for_each(|s| *s /= count as f64);
        sum
    })
}

/// Detector-aware attack: a projected-gradient loop that pushes each channel
/// away from its true identity while pulling the summed affinities up, the
/// published evasion objective. Support sets refresh every
/// `config.refresh_every` steps and membership is treated as constant in
/// between.
pub fn adaptive_attack(
    query: &QuerySample,
    indexes: &[ExpertIndex],
    detector: &DetectorModel,
    k: usize,
    config: &AttackConfig,
) -> Result<QuerySample> {
    config.validate()?;
    if indexes.is_empty() {
        return Err(Error::Empty);
    }
    if query.n_experts() != indexes.len() {
        return Err(Error::DimensionMismatch {
            expected: indexes.len(),
            actual: query.n_experts(),
        });
    }
    let expected = feature_dim(indexes.len(), k);
    if detector.input_dim() != expected {
        return Err(Error::NotTrained(format!(
            "detector expects d={}, scenario needs d={expected}",
            detector.input_dim()
        )));
    }

    let n = indexes.len();
    let true_sums: Vec<Vec<f64>> = indexes
        .iter()
        .map(|idx| {
            identity_embedding_sum(idx, query.identity_id).ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "identity {} missing from gallery of expert {}",
                    query.identity_id,
                    idx.expert_id()
                ))
            })
        })
        .collect::<Result<_>>()?;

    let originals: Vec<Vec<f64>> = (0..n)
        .map(|i| query.embedding(i).values().to_vec())
        .collect();
    let mut current = originals.clone();
    let mut support_sums: Vec<Vec<f64>> = vec![vec![0.0; query.dim()]; n];
    let no_exclusions = HashSet::new();

    for step in 0..config.steps {
        if step % config.refresh_every == 0 {
            for i in 0..n {
                let emb = embedding_from_values(current[i].clone())?;
                let support = retrieve_top_k(&indexes[i], query.query_id, &emb, k, &no_exclusions)?;
                let mut sum = vec![0.0; query.dim()];
                for entry in &support.entries {
                    for (s, v) in sum.iter_mut().zip(entry.embedding.values()) {
                        *s += v;
                    }
                }
                support_sums[i] = sum;
            }
        }
        for i in 0..n {
            let grad = adaptive_gradient(&true_sums[i], &support_sums[i], config.affinity_weight);
            // Normalized descent direction keeps step_size meaningful
            // independent of gallery and support-set sizes.
            let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if gnorm < 1e-12 {
                continue;
            }
            let moved: Vec<f64> = current[i]
                .iter()
                .zip(&grad)
                .map(|(x, g)| x - config.step_size * g / gnorm)
                .collect();
            let unit = renormalize_or_perp(&originals[i], moved);
            current[i] = project_to_cap(&originals[i], unit, config.epsilon);
        }
    }

    let mut out = query.clone().with_label(QueryLabel::Adversarial);
    for (i, values) in current.into_iter().enumerate() {
        out = out.with_embedding(i, embedding_from_values(values)?);
    }
    Ok(out)
}

/// Applies [`adaptive_attack`] to every query.
pub fn adaptive_attack_all(
    queries: &[QuerySample],
    indexes: &[ExpertIndex],
    detector: &DetectorModel,
    k: usize,
    config: &AttackConfig,
) -> Result<Vec<QuerySample>> {
    parallel::map(queries, |q| {
        adaptive_attack(q, indexes, detector, k, config)
    })
    .into_iter()
    .collect()
}

/// Outcome of a targeted attack on one query.
#[derive(Debug, Clone)]
pub struct TargetedOutcome {
    pub query: QuerySample,
    /// True when every expert retrieves the target identity for at least
    /// half of its top-K.
    pub success: bool,
}

/// Pushes every expert channel toward the target identity's gallery centroid
/// within the epsilon-ball, then checks whether all experts retrieve the
/// target for at least half of their top-K.
pub fn targeted_multi_attack(
    query: &QuerySample,
    indexes: &[ExpertIndex],
    target_identity: u64,
    k: usize,
    config: &AttackConfig,
) -> Result<TargetedOutcome> {
    config.validate()?;
    if indexes.is_empty() {
        return Err(Error::Empty);
    }
    if query.n_experts() != indexes.len() {
        return Err(Error::DimensionMismatch {
            expected: indexes.len(),
            actual: query.n_experts(),
        });
    }
    if target_identity == query.identity_id {
        return Err(Error::InvalidConfig(format!(
            "target identity {target_identity} equals the query identity"
        )));
    }

    let n = indexes.len();
    let centroids: Vec<Vec<f64>> = indexes
        .iter()
        .map(|idx| {
            identity_mean(idx, target_identity)
                .ok_or_else(|| {
                    Error::InvalidConfig(format!(
                        "target identity {target_identity} missing from gallery of expert {}",
                        idx.expert_id()
                    ))
                })
                .and_then(|m| normalize(&m).map(|e| e.values().to_vec()))
        })
        .collect::<Result<_>>()?;

    let originals: Vec<Vec<f64>> = (0..n)
        .map(|i| query.embedding(i).values().to_vec())
        .collect();
    let mut current = originals.clone();

    for _ in 0..config.steps {
        for i in 0..n {
            let moved: Vec<f64> = current[i]
                .iter()
                .zip(&centroids[i])
                .map(|(x, c)| x + config.step_size * c)
                .collect();
            let unit = renormalize_or_perp(&originals[i], moved);
            current[i] = project_to_cap(&originals[i], unit, config.epsilon);
        }
    }

    let mut out = query.clone().with_label(QueryLabel::Adversarial);
    for (i, values) in current.iter().enumerate() {
        out = out.with_embedding(i, embedding_from_values(values.clone())?);
    }

    let no_exclusions = HashSet::new();
    let mut success = true;
    for (i, index) in indexes.iter().enumerate() {
        let support = retrieve_top_k(index, out.query_id, out.embedding(i), k, &no_exclusions)?;
        let hits = support
            .entries
            .iter()
            .filter(|e| {
                index
                    .get(e.item_id)
                    .map(|it| it.identity_id == target_identity)
                    .unwrap_or(false)
            })
            .count();
        if hits * 2 < k {
            success = false;
            break;
        }
    }

    Ok(TargetedOutcome {
        query: out,
        success,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::normalize;
    use crate::scenario::{generate_scenario, ScenarioConfig};
    use rand::Rng;

    fn unit(v: &[f64]) -> Vec<f64> {
        normalize(v).unwrap().values().to_vec()
    }

    #[test]
    fn perturb_zero_epsilon_is_identity() {
        let q = unit(&[0.8, 0.6, 0.0]);
        assert_eq!(perturb_channel(&q, &[1.0, 0.0, 0.0], 0.0), q);
    }

    #[test]
    fn perturb_antipodal_flips_sign() {
        let q = unit(&[0.8, 0.6]);
        let neg: Vec<f64> = q.iter().map(|x| -x).collect();
        let moved = perturb_channel(&q, &neg, 2.0);
        for (m, n) in moved.iter().zip(&neg) {
            assert!((m - n).abs() < 1e-12, "diameter move reaches the antipode");
        }
    }

    #[test]
    fn perturb_respects_cap_and_unit_norm() {
        let mut rng = StdRng::seed_from_u64(80);
        for _ in 0..500 {
            let q = unit(
                &(0..8)
                    .map(|_| rng.random_range(-1.0..1.0))
                    .collect::<Vec<_>>(),
            );
            let dir = unit(
                &(0..8)
                    .map(|_| rng.random_range(-1.0..1.0))
                    .collect::<Vec<_>>(),
            );
            let eps = rng.random_range(0.0..2.2);
            let p = perturb_channel(&q, &dir, eps);
            let norm = p.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-9);
            let dist = p
                .iter()
                .zip(&q)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            assert!(dist <= eps + 1e-9, "dist {dist} vs eps {eps}");
        }
    }

    #[test]
    fn adaptive_gradient_matches_finite_differences() {
        let mut rng = StdRng::seed_from_u64(81);
        for _ in 0..20 {
            let d = 6;
            let q = unit(
                &(0..d)
                    .map(|_| rng.random_range(-1.0..1.0))
                    .collect::<Vec<_>>(),
            );
            let m: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            let s: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
            let w = rng.random_range(0.0..2.0);

            let grad = adaptive_gradient(&m, &s, w);
            let h = 1e-6;
            for i in 0..d {
                let mut plus = q.clone();
                plus[i] += h;
                let mut minus = q.clone();
                minus[i] -= h;
                let numeric = (adaptive_smooth_loss(&plus, &m, &s, w)
                    - adaptive_smooth_loss(&minus, &m, &s, w))
                    / (2.0 * h);
                let rel = (grad[i] - numeric).abs() / grad[i].abs().max(numeric.abs()).max(1e-8);
                assert!(rel < 1e-3, "relative gradient error {rel}");
            }
        }
    }

    #[test]
    fn naive_zero_epsilon_keeps_embeddings() {
        let (_, queries) = generate_scenario(&ScenarioConfig {
            n_identities: 3,
            items_per_identity: 4,
            n_experts: 2,
            dimension: 8,
            queries_per_identity: 1,
            ..ScenarioConfig::default()
        })
        .unwrap();
        let config = AttackConfig {
            epsilon: 0.0,
            ..AttackConfig::default()
        };
        let out = naive_attack(&queries[0], &config).unwrap();
        assert_eq!(out.embeddings(), queries[0].embeddings());
        assert_eq!(out.label, QueryLabel::Adversarial);
    }

    #[test]
    fn naive_attack_is_deterministic_and_order_independent() {
        let (_, queries) = generate_scenario(&ScenarioConfig {
            n_identities: 4,
            items_per_identity: 4,
            n_experts: 2,
            dimension: 8,
            queries_per_identity: 2,
            ..ScenarioConfig::default()
        })
        .unwrap();
        let config = AttackConfig::default();
        let all = naive_attack_all(&queries, &config).unwrap();
        let single = naive_attack(&queries[3], &config).unwrap();
        assert_eq!(all[3].embeddings(), single.embeddings());
    }

    #[test]
    fn attacks_never_mutate_galleries() {
        let (indexes, queries) = generate_scenario(&ScenarioConfig {
            n_identities: 4,
            items_per_identity: 6,
            n_experts: 2,
            dimension: 8,
            queries_per_identity: 1,
            ..ScenarioConfig::default()
        })
        .unwrap();
        let before: Vec<Vec<f64>> = indexes[0]
            .items()
            .iter()
            .map(|it| it.embedding.values().to_vec())
            .collect();
        let _ = targeted_multi_attack(
            &queries[0],
            &indexes,
            (queries[0].identity_id + 1) % 4,
            3,
            &AttackConfig::default(),
        )
        .unwrap();
        let after: Vec<Vec<f64>> = indexes[0]
            .items()
            .iter()
            .map(|it| it.embedding.values().to_vec())
            .collect();
        assert_eq!(before, after);
    }

    #[test]
    fn targeted_unbounded_succeeds_on_degenerate_scenario() {
        let (indexes, queries) = generate_scenario(&ScenarioConfig {
            n_identities: 5,
            items_per_identity: 6,
            n_experts: 3,
            dimension: 16,
            cluster_noise: 0.0,
            cross_expert_jitter: 0.0,
            queries_per_identity: 1,
            ..ScenarioConfig::default()
        })
        .unwrap();
        let q = &queries[0];
        let target = (q.identity_id + 1) % 5;
        let config = AttackConfig {
            epsilon: 2.0,
            steps: 80,
            step_size: 0.5,
            ..AttackConfig::default()
        };
        let outcome = targeted_multi_attack(q, &indexes, target, 5, &config).unwrap();
        assert!(outcome.success, "unconstrained attack reaches the centroid");
    }

    #[test]
    fn targeted_zero_epsilon_fails_unless_already_there() {
        let (indexes, queries) = generate_scenario(&ScenarioConfig {
            n_identities: 5,
            items_per_identity: 6,
            n_experts: 3,
            dimension: 16,
            queries_per_identity: 1,
            ..ScenarioConfig::default()
        })
        .unwrap();
        let q = &queries[0];
        let target = (q.identity_id + 1) % 5;
        let config = AttackConfig {
            epsilon: 0.0,
            ..AttackConfig::default()
        };
        let outcome = targeted_multi_attack(q, &indexes, target, 5, &config).unwrap();
        assert!(
            !outcome.success,
            "a benign query does not retrieve the target"
        );
    }

    #[test]
    fn targeted_rejects_own_identity() {
        let (indexes, queries) = generate_scenario(&ScenarioConfig {
            n_identities: 3,
            items_per_identity: 4,
            n_experts: 2,
            dimension: 8,
            queries_per_identity: 1,
            ..ScenarioConfig::default()
        })
        .unwrap();
        let q = &queries[0];
        assert!(matches!(
            targeted_multi_attack(q, &indexes, q.identity_id, 3, &AttackConfig::default()),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn adaptive_zero_steps_is_identity() {
        let (indexes, queries) = generate_scenario(&ScenarioConfig {
            n_identities: 4,
            items_per_identity: 6,
            n_experts: 2,
            dimension: 8,
            queries_per_identity: 1,
            ..ScenarioConfig::default()
        })
        .unwrap();
        let detector = crate::detector::DetectorModel::init(
            feature_dim(2, 3),
            (8, 4),
            crate::detector::Hyperparams::default(),
            1,
        );
        let config = AttackConfig {
            steps: 0,
            ..AttackConfig::default()
        };
        let out = adaptive_attack(&queries[0], &indexes, &detector, 3, &config).unwrap();
        assert_eq!(out.embeddings(), queries[0].embeddings());
    }

    #[test]
    fn adaptive_rejects_mismatched_detector() {
        let (indexes, queries) = generate_scenario(&ScenarioConfig {
            n_identities: 4,
            items_per_identity: 6,
            n_experts: 2,
            dimension: 8,
            queries_per_identity: 1,
            ..ScenarioConfig::default()
        })
        .unwrap();
        let detector = crate::detector::DetectorModel::init(
            99,
            (8, 4),
            crate::detector::Hyperparams::default(),
            1,
        );
        assert!(matches!(
            adaptive_attack(
                &queries[0],
                &indexes,
                &detector,
                3,
                &AttackConfig::default()
            ),
            Err(Error::NotTrained(_))
        ));
    }

    #[test]
    fn adaptive_respects_epsilon_ball() {
        let (indexes, queries) = generate_scenario(&ScenarioConfig {
            n_identities: 5,
            items_per_identity: 8,
            n_experts: 3,
            dimension: 16,
            queries_per_identity: 2,
            ..ScenarioConfig::default()
        })
        .unwrap();
        let detector = crate::detector::DetectorModel::init(
            feature_dim(3, 4),
            (8, 4),
            crate::detector::Hyperparams::default(),
            1,
        );
        let config = AttackConfig {
            epsilon: 0.5,
            steps: 30,
            ..AttackConfig::default()
        };
        for q in &queries {
            let out = adaptive_attack(q, &indexes, &detector, 4, &config).unwrap();
            for i in 0..q.n_experts() {
                let dist = out
                    .embedding(i)
                    .values()
                    .iter()
                    .zip(q.embedding(i).values())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                assert!(dist <= 0.5 + 1e-9);
            }
        }
    }
}
