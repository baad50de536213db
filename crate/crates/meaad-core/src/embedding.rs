//! Unit-norm embedding vectors, cosine similarity, and expert gallery indexes.
//!
//! Every embedding in the pipeline is normalized once at ingestion; all
//! downstream similarity is a plain dot product of unit vectors.

use crate::error::{Error, Result};

/// Tolerance under which a vector is treated as zero and cannot be normalized.
pub const ZERO_NORM_EPS: f64 = 1e-12;

/// A unit-norm embedding of fixed dimension.
///
/// Construction goes through [`normalize`], so holding an `EmbeddingVector`
/// guarantees finite entries and an L2 norm of 1 within 1e-9.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector {
    values: Vec<f64>,
}

impl EmbeddingVector {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Normalizes `v` to unit L2 norm.
///
/// Errors with `NonFinite` on NaN/Inf entries and `ZeroVector` when the norm
/// is below [`ZERO_NORM_EPS`].
pub fn normalize(v: &[f64]) -> Result<EmbeddingVector> {
    if v.len() < 2 {
        return Err(Error::InvalidConfig(format!(
            "embedding dimension must be at least 2, got {}",
            v.len()
        )));
    }
    if let Some(bad) = v.iter().find(|x| !x.is_finite()) {
        return Err(Error::NonFinite(format!("embedding entry {bad}")));
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm < ZERO_NORM_EPS {
        return Err(Error::ZeroVector);
    }
    Ok(EmbeddingVector {
        values: v.iter().map(|x| x / norm).collect(),
    })
}

/// Wraps values that are already unit-norm without renormalizing, so that
/// parsing a serialized embedding reproduces it bitwise.
///
/// Errors unless the norm is within 1e-9 of 1.
pub fn from_unit_values(v: &[f64]) -> Result<EmbeddingVector> {
    if v.len() < 2 {
        return Err(Error::InvalidConfig(format!(
            "embedding dimension must be at least 2, got {}",
            v.len()
        )));
    }
    if let Some(bad) = v.iter().find(|x| !x.is_finite()) {
        return Err(Error::NonFinite(format!("embedding entry {bad}")));
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidConfig(format!(
            "expected a unit vector, norm is {norm}"
        )));
    }
    Ok(EmbeddingVector { values: v.to_vec() })
}

/// Cosine similarity of two unit vectors, clamped to [-1, 1] to absorb
/// rounding.
pub fn cosine_similarity(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            actual: b.dim(),
        });
    }
    Ok(dot(a.values(), b.values()).clamp(-1.0, 1.0))
}

/// Plain dot product; callers are responsible for matching dimensions.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// One gallery entry: a stored embedding with its item and identity ids.
#[derive(Debug, Clone)]
pub struct GalleryItem {
    pub item_id: u64,
    pub identity_id: u64,
    pub embedding: EmbeddingVector,
}

/// One expert model's gallery: an id, a fixed dimension, and its items
/// sorted by `item_id`.
#[derive(Debug, Clone)]
pub struct ExpertIndex {
    expert_id: usize,
    dimension: usize,
    items: Vec<GalleryItem>,
}

impl ExpertIndex {
    /// Builds an index, enforcing unique item ids and a uniform dimension.
    pub fn new(expert_id: usize, dimension: usize, mut items: Vec<GalleryItem>) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::Empty);
        }
        for item in &items {
            if item.embedding.dim() != dimension {
                return Err(Error::DimensionMismatch {
                    expected: dimension,
                    actual: item.embedding.dim(),
                });
            }
        }
        items.sort_by_key(|it| it.item_id);
        if items.windows(2).any(|w| w[0].item_id == w[1].item_id) {
            return Err(Error::InvalidConfig(format!(
                "duplicate item_id in gallery of expert {expert_id}"
            )));
        }
        Ok(Self {
            expert_id,
            dimension,
            items,
        })
    }

    pub fn expert_id(&self) -> usize {
        self.expert_id
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Items in ascending `item_id` order.
    pub fn items(&self) -> &[GalleryItem] {
        &self.items
    }

    pub fn get(&self, item_id: u64) -> Option<&GalleryItem> {
        self.items
            .binary_search_by_key(&item_id, |it| it.item_id)
            .ok()
            .map(|i| &self.items[i])
    }

    /// Distinct identity ids present in the gallery, ascending.
    pub fn identity_ids(&self) -> Vec<u64> {
        let mut ids: Vec<u64> = self.items.iter().map(|it| it.identity_id).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }
}

/// Classification tag carried by a query through the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryLabel {
    Benign,
    Adversarial,
    Unknown,
}

impl QueryLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            QueryLabel::Benign => "benign",
            QueryLabel::Adversarial => "adversarial",
            QueryLabel::Unknown => "unknown",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "benign" => Some(QueryLabel::Benign),
            "adversarial" => Some(QueryLabel::Adversarial),
            "unknown" => Some(QueryLabel::Unknown),
            _ => None,
        }
    }
}

/// A probe sample carrying one embedding per expert channel.
///
/// Real expert models map one probe image into N different embedding spaces,
/// so a query holds N embeddings of the same dimension. The identity id is
/// consumed only by the synthetic generator and the targeted attack, never
/// by detection.
#[derive(Debug, Clone)]
pub struct QuerySample {
    pub query_id: u64,
    pub identity_id: u64,
    pub label: QueryLabel,
    embeddings: Vec<EmbeddingVector>,
}

impl QuerySample {
    pub fn new(
        query_id: u64,
        identity_id: u64,
        label: QueryLabel,
        embeddings: Vec<EmbeddingVector>,
    ) -> Result<Self> {
        if embeddings.is_empty() {
            return Err(Error::Empty);
        }
        let dim = embeddings[0].dim();
        for e in &embeddings {
            if e.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: e.dim(),
                });
            }
        }
        Ok(Self {
            query_id,
            identity_id,
            label,
            embeddings,
        })
    }

    pub fn n_experts(&self) -> usize {
        self.embeddings.len()
    }

    pub fn dim(&self) -> usize {
        self.embeddings[0].dim()
    }

    /// The embedding seen by expert channel `expert_id`.
    pub fn embedding(&self, expert_id: usize) -> &EmbeddingVector {
        &self.embeddings[expert_id]
    }

    pub fn embeddings(&self) -> &[EmbeddingVector] {
        &self.embeddings
    }

    /// Copy restricted to the first `n` expert channels.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.embeddings.len() {
            return Err(Error::InvalidConfig(format!(
                "cannot truncate {}-channel query to {n} channels",
                self.embeddings.len()
            )));
        }
        Ok(Self {
            query_id: self.query_id,
            identity_id: self.identity_id,
            label: self.label,
            embeddings: self.embeddings[..n].to_vec(),
        })
    }

    /// Replaces the embedding of one expert channel.
    pub fn with_embedding(mut self, expert_id: usize, embedding: EmbeddingVector) -> Self {
        self.embeddings[expert_id] = embedding;
        self
    }

    pub fn with_label(mut self, label: QueryLabel) -> Self {
        self.label = label;
        self
    }
}
