//! Map over independent work items, on rayon when the `parallel` feature
//! is enabled and sequentially otherwise. Output order always matches
//! input order, so results are identical either way.
//!
//! Rayon only engages from `min_parallel` items upward: the work items at
//! the call sites (single max-flows, per-root pricing, per-stream
//! replays) cost microseconds to milliseconds, and below the threshold
//! the fork-join overhead outweighs the win.

#[cfg(feature = "parallel")]
pub(crate) fn map_collect<T, U, F>(items: Vec<T>, min_parallel: usize, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    if items.len() < min_parallel {
        items.into_iter().map(f).collect()
    } else {
        items.into_par_iter().map(f).collect()
    }
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_collect<T, U, F>(items: Vec<T>, _min_parallel: usize, f: F) -> Vec<U>
where
    F: Fn(T) -> U,
{
    items.into_iter().map(f).collect()
}
