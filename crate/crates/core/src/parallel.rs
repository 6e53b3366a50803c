//! Worker pool and per-stratum random streams.
//!
//! Work is split into a fixed number of strata that does not depend on the
//! worker count; each stratum draws from its own ChaCha stream and results
//! are combined in stratum order, so output is identical for any
//! `HTYPE_THREADS`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Worker count: `HTYPE_THREADS` if set and positive, else all cores.
pub fn threads() -> usize {
    std::env::var("HTYPE_THREADS")
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|n| *n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

pub fn with_pool<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> R {
    match rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

/// Independent stream for one stratum.
pub fn stratum_rng(seed: u64, stratum: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stratum);
    rng
}

/// Map `f` over strata `0..count` in parallel; results come back in order.
pub fn map_strata<T: Send>(count: usize, workers: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    with_pool(workers, || (0..count).into_par_iter().map(&f).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn strata_independent_of_workers() {
        let f = |s: usize| {
            let mut r = stratum_rng(9, s as u64);
            (0..100).map(|_| r.gen::<f64>()).sum::<f64>()
        };
        assert_eq!(map_strata(16, 1, f), map_strata(16, 3, f));
    }
}
