//! Ordered parallel evaluation of sweep points.

use rayon::prelude::*;

use crate::Failure;

/// Maps `f` over `items` on a worker pool of `jobs` threads (0 picks the
/// rayon default) and returns results in input order, so emitted rows never
/// depend on completion order. Each point is independent; a serial and a
/// parallel run produce identical output.
pub fn map_ordered<T, U, F>(jobs: usize, items: Vec<T>, f: F) -> Result<Vec<U>, Failure>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Failure::Validation(format!("cannot build worker pool: {e}")))?;
    Ok(pool.install(|| items.into_par_iter().map(f).collect()))
}

/// `count` evenly spaced values from `lo` to `hi` inclusive; a single point
/// sits at `lo`.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved_under_parallelism() {
        let items: Vec<usize> = (0..1000).collect();
        let serial = map_ordered(1, items.clone(), |i| i * i).unwrap();
        let parallel = map_ordered(4, items, |i| i * i).unwrap();
        assert_eq!(serial, parallel);
        assert_eq!(serial[999], 999 * 999);
    }

    #[test]
    fn linspace_endpoints_are_exact() {
        let grid = linspace(0.8, 1.2, 2001);
        assert_eq!(grid.len(), 2001);
        assert_eq!(grid[0], 0.8);
        assert_eq!(grid[2000], 1.2);
        let single = linspace(0.8, 1.2, 1);
        assert_eq!(single, vec![0.8]);
    }
}
