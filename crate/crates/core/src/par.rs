//! Data-parallel helpers.
//!
//! With the `parallel` feature (on by default) the parallel mode runs on the
//! rayon global pool. Without it, or with [`Parallelism::Sequential`], every
//! helper degrades to a plain iterator. Output order and values never depend
//! on the mode.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parallelism {
    Sequential,
    Parallel,
}

impl Default for Parallelism {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Parallelism::Parallel
        } else {
            Parallelism::Sequential
        }
    }
}

impl Parallelism {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Parallelism::Parallel
    }
}

/// Maps `f` over `items`, preserving order.
pub fn map<T, U, F>(mode: Parallelism, items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        return items.par_iter().map(f).collect();
    }
    let _ = mode;
    items.iter().map(f).collect()
}

/// Maps `f` over `0..n`, preserving order.
pub fn map_range<U, F>(mode: Parallelism, n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = mode;
    (0..n).map(f).collect()
}

/// Calls `f(chunk_index, chunk_a, chunk_b)` for matching fixed-size chunks of
/// two mutable slices. `a` is chunked by `size_a`, `b` by `size_b`.
pub fn for_each_chunk_pair<A, B, F>(
    mode: Parallelism,
    a: &mut [A],
    size_a: usize,
    b: &mut [B],
    size_b: usize,
    f: F,
) where
    A: Send,
    B: Send,
    F: Fn(usize, &mut [A], &mut [B]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        a.par_chunks_mut(size_a)
            .zip(b.par_chunks_mut(size_b))
            .enumerate()
            .for_each(|(i, (ca, cb))| f(i, ca, cb));
        return;
    }
    let _ = mode;
    a.chunks_mut(size_a)
        .zip(b.chunks_mut(size_b))
        .enumerate()
        .for_each(|(i, (ca, cb))| f(i, ca, cb));
}
