//! Data-parallel helpers. With the `parallel` feature these run on rayon's
//! pool; without it they fall back to plain sequential iterators. Results are
//! always returned in index order, so callers see identical output either way.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// `(0..n).map(f).collect()`, in parallel when enabled.
#[cfg(feature = "parallel")]
pub fn map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// `items.iter().map(f).collect()`, in parallel when enabled.
#[cfg(feature = "parallel")]
pub fn map_slice<S, T, F>(items: &[S], f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&S) -> T + Sync + Send,
{
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_slice<S, T, F>(items: &[S], f: F) -> Vec<T>
where
    F: Fn(&S) -> T,
{
    items.iter().map(f).collect()
}

/// First index (lowest) in `0..n` for which `f` yields `Some`, with its value.
/// Deterministic regardless of scheduling.
#[cfg(feature = "parallel")]
pub fn find_first<T, F>(n: usize, f: F) -> Option<(usize, T)>
where
    T: Send,
    F: Fn(usize) -> Option<T> + Sync + Send,
{
    (0..n)
        .into_par_iter()
        .find_map_first(|i| f(i).map(|t| (i, t)))
}

#[cfg(not(feature = "parallel"))]
pub fn find_first<T, F>(n: usize, f: F) -> Option<(usize, T)>
where
    F: Fn(usize) -> Option<T>,
{
    (0..n).find_map(|i| f(i).map(|t| (i, t)))
}

/// Whether the crate was built with the rayon backend.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}
