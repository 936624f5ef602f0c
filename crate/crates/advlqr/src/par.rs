//! Batch execution facade. With the `parallel` feature (default) batches run
//! on the rayon global pool; without it, the same helpers iterate
//! sequentially. Outputs are collected in index order either way, so results
//! are identical down to floating-point rounding.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Apply `f` to every item, preserving input order in the output.
pub fn batch_map<I, O, F>(items: &[I], f: F) -> Vec<O>
where
    I: Sync,
    O: Send,
    F: Fn(&I) -> O + Sync + Send,
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

/// Sequential version of [`batch_map`], available regardless of features.
/// Exists so benchmarks can compare both paths in one build.
pub fn batch_map_seq<I, O, F>(items: &[I], f: F) -> Vec<O>
where
    F: Fn(&I) -> O,
{
    items.iter().map(f).collect()
}

/// Run `f` for indices `0..n`, collecting in index order.
pub fn batch_map_indexed<O, F>(n: usize, f: F) -> Vec<O>
where
    O: Send,
    F: Fn(usize) -> O + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Sequential version of [`batch_map_indexed`].
pub fn batch_map_indexed_seq<O, F>(n: usize, f: F) -> Vec<O>
where
    F: Fn(usize) -> O,
{
    (0..n).map(f).collect()
}

/// Cap the rayon global pool from the `ADVLQR_THREADS` environment variable.
/// Call once at process start; later calls (or a pool already built) are
/// ignored. A no-op without the `parallel` feature.
pub fn configure_threads_from_env() {
    #[cfg(feature = "parallel")]
    {
        if let Ok(value) = std::env::var("ADVLQR_THREADS") {
            if let Ok(threads) = value.trim().parse::<usize>() {
                if threads >= 1 {
                    let _ = rayon::ThreadPoolBuilder::new()
                        .num_threads(threads)
                        .build_global();
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree() {
        let items: Vec<u64> = (0..257).collect();
        let f = |x: &u64| x.wrapping_mul(0x9e3779b97f4a7c15).rotate_left(17);
        assert_eq!(batch_map(&items, f), batch_map_seq(&items, f));
        let g = |i: usize| (i as f64).sqrt().sin();
        let par = batch_map_indexed(1000, g);
        let seq = batch_map_indexed_seq(1000, g);
        assert_eq!(par, seq);
    }
}
