//! Data-parallel map helpers.
//!
//! Grid evaluations, parameter-box sweeps and the acceptance battery are
//! independent cell computations.  With the `parallel` feature (default)
//! they run on the rayon pool; without it the same entry points run
//! sequentially.  Results are always gathered in input order, so output is
//! byte-identical either way.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map with the crate-default strategy (rayon when the `parallel` feature is
/// enabled, sequential otherwise).
#[cfg(feature = "parallel")]
pub fn map_collect<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_collect<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(f).collect()
}

/// Always-sequential map, kept available for benchmarking against the
/// parallel path.
pub fn map_collect_seq<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree_in_order() {
        let items: Vec<u64> = (0..257).collect();
        let a = map_collect(&items, |x| x * x + 1);
        let b = map_collect_seq(&items, |x| x * x + 1);
        assert_eq!(a, b);
    }
}
