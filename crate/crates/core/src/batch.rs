//! Deterministic batch evaluation: the per-sample map may run in parallel
//! (`parallel` feature, on by default), while reductions always fold mapped
//! results in ascending sample order.  Parallel and sequential builds therefore
//! produce bit-identical floating-point results.

use crate::error::{Error, Result};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

// ── Mapping ──────────────────────────────────────────────────────────────────

/// Sequential reference implementation of the indexed map.
pub fn map_indexed_seq<T: Sync, U: Send>(
    items: &[T],
    f: impl Fn(usize, &T) -> U + Send + Sync,
) -> Vec<U> {
    items.iter().enumerate().map(|(i, t)| f(i, t)).collect()
}

/// Applies `f` to every item, returning outputs in input order.  Runs on the
/// rayon pool when the `parallel` feature is enabled, sequentially otherwise.
#[cfg(feature = "parallel")]
pub fn map_indexed<T: Sync, U: Send>(
    items: &[T],
    f: impl Fn(usize, &T) -> U + Send + Sync,
) -> Vec<U> {
    items.par_iter().enumerate().map(|(i, t)| f(i, t)).collect()
}

/// Applies `f` to every item, returning outputs in input order.  Runs on the
/// rayon pool when the `parallel` feature is enabled, sequentially otherwise.
#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T: Sync, U: Send>(
    items: &[T],
    f: impl Fn(usize, &T) -> U + Send + Sync,
) -> Vec<U> {
    map_indexed_seq(items, f)
}

// ── Ordered reduction ────────────────────────────────────────────────────────

/// Maps every item (possibly in parallel) and folds the outputs sequentially
/// in ascending index order — the float-reduction order is fixed regardless of
/// thread count.
pub fn map_fold<T: Sync, U: Send, A>(
    items: &[T],
    f: impl Fn(usize, &T) -> U + Send + Sync,
    init: A,
    mut fold: impl FnMut(A, U) -> A,
) -> A {
    let mapped = map_indexed(items, f);
    let mut acc = init;
    for u in mapped {
        acc = fold(acc, u);
    }
    acc
}

/// Fallible variant: the first error (by ascending index) wins.
pub fn try_map_fold<T: Sync, U: Send, A>(
    items: &[T],
    f: impl Fn(usize, &T) -> Result<U> + Send + Sync,
    init: A,
    mut fold: impl FnMut(A, U) -> A,
) -> Result<A> {
    let mapped = map_indexed(items, f);
    let mut acc = init;
    for u in mapped {
        acc = fold(acc, u?);
    }
    Ok(acc)
}

// ── Thread-pool control ──────────────────────────────────────────────────────

/// Sets the global worker-thread count (0 = library default).  May be called
/// at most once, before any parallel work; later calls fail.
#[cfg(feature = "parallel")]
pub fn configure_threads(n: usize) -> Result<()> {
    if n == 0 {
        return Ok(());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::InvalidArgument(format!("thread pool already configured: {e}")))
}

/// Sequential build: accepts the call but nothing to configure.
#[cfg(not(feature = "parallel"))]
pub fn configure_threads(_n: usize) -> Result<()> {
    Ok(())
}

// ── Tests ────────────────────────────────────────────────────────────────────
