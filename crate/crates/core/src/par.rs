//! Data-parallel helpers. With the `parallel` feature these fan out over
//! rayon's pool; without it they run the same closures sequentially.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

pub fn flat_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Vec<R> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().flat_map_iter(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().flat_map(f).collect()
    }
}

/// Smallest `n` in `range` satisfying `pred`, or `None`.
pub fn find_first_in(range: std::ops::Range<u64>, pred: impl Fn(u64) -> bool + Sync + Send) -> Option<u64> {
    #[cfg(feature = "parallel")]
    {
        range.into_par_iter().find_first(|&n| pred(n))
    }
    #[cfg(not(feature = "parallel"))]
    {
        range.into_iter().find(|&n| pred(n))
    }
}
