//! Detection of adversarial queries against embedding-based retrieval by
//! measuring context inconsistency across the top-K results of multiple
//! expert galleries.
//!
//! The pipeline: expert galleries index unit-norm embeddings; exact top-K
//! cosine retrieval produces per-expert support sets; three affinity
//! families (query-support, support-support, cross-expert) form a context
//! feature; an MLP detector trained on benign and attacked queries flags
//! inconsistent retrievals. A scenario generator, embedding-space attacks,
//! and metrics make the whole loop reproducible from a single seed.

pub mod attack;
pub mod detector;
pub mod embedding;
pub mod error;
pub mod features;
pub mod format;
pub mod metrics;
pub mod parallel;
pub mod relation;
pub mod retrieval;
pub mod scenario;

pub use error::{Error, Result};
