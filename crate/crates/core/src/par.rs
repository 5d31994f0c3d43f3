//! Sweep-level data parallelism. Each element is computed by a pure
//! function, so results are bitwise identical to the sequential path
//! regardless of thread count; only the element schedule changes.

/// Always-sequential map, kept callable so benchmarks can compare against
/// the parallel path under the default feature set.
pub fn seq_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    items.iter().map(f).collect()
}

#[cfg(feature = "parallel")]
pub fn par_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn par_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    seq_map(items, f)
}

/// Maps `0..n` to values. Used for grid fills in the wave solver; falls back
/// to a plain loop below `threshold` where task overhead dominates.
pub fn par_map_indexed<U, F>(n: usize, threshold: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if n >= threshold {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    let _ = threshold;
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn par_matches_seq_bitwise() {
        let xs: Vec<f64> = (0..257).map(|i| 0.01 + i as f64 * 1e-3).collect();
        let f = |x: &f64| (x.sin() * x.exp()).powi(7) / (1.0 + x * x);
        let a = seq_map(&xs, f);
        let b = par_map(&xs, f);
        for (u, v) in a.iter().zip(&b) {
            assert_eq!(u.to_bits(), v.to_bits());
        }
    }
}
