//! Data-parallel execution over independent work items.
//!
//! Every per-item computation in this crate is pure, so running items on a
//! rayon pool returns bitwise-identical results to the sequential fallback.
//! The `parallel` feature (on by default) switches [`map`] and [`for_each`]
//! to rayon; [`map_seq`] and [`for_each_seq`] always run inline and exist so
//! benchmarks can compare both paths in one build.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `items`, preserving order.
#[cfg(feature = "parallel")]
pub fn map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    items.par_iter().map(f).collect()
}

/// Maps `f` over `items`, preserving order.
#[cfg(not(feature = "parallel"))]
pub fn map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

/// Sequential counterpart of [`map`], always available.
pub fn map_seq<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

/// Consumes a vector of independent work items, applying `f` to each.
/// Used for disjoint mutable chunks (for example matrix row blocks).
#[cfg(feature = "parallel")]
pub fn for_each<T, F>(items: Vec<T>, f: F)
where
    T: Send,
    F: Fn(T) + Sync + Send,
{
    items.into_par_iter().for_each(f);
}

/// Consumes a vector of independent work items, applying `f` to each.
#[cfg(not(feature = "parallel"))]
pub fn for_each<T, F>(items: Vec<T>, f: F)
where
    F: Fn(T),
{
    items.into_iter().for_each(f);
}

/// Sequential counterpart of [`for_each`], always available.
pub fn for_each_seq<T, F>(items: Vec<T>, f: F)
where
    F: Fn(T),
{
    items.into_iter().for_each(f);
}

/// Maps `f` over owned work items, preserving order. Lets a chunked pass
/// mutate disjoint views while returning a per-chunk partial result that the
/// caller reduces in chunk order.
#[cfg(feature = "parallel")]
pub fn map_owned<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    items.into_par_iter().map(f).collect()
}

/// Maps `f` over owned work items, preserving order.
#[cfg(not(feature = "parallel"))]
pub fn map_owned<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    F: Fn(T) -> U,
{
    items.into_iter().map(f).collect()
}
