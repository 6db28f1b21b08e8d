//! Deterministic random streams for parallel Monte Carlo.
//!
//! Work is cut into fixed-size chunks and chunk `i` draws from stream `i` of
//! a ChaCha generator seeded by the master seed, so results do not depend on
//! the number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub const DEFAULT_CHUNK: usize = 4096;

pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Runs `f(rng, n)` on consecutive chunks of `total` samples in parallel and
/// returns the per-chunk results in chunk order.
pub fn parallel_chunks<T, F>(seed: u64, total: usize, chunk: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, usize) -> T + Sync,
{
    let chunk = chunk.max(1);
    let count = total.div_ceil(chunk);
    (0..count)
        .into_par_iter()
        .map(|i| {
            let n = chunk.min(total - i * chunk);
            let mut rng = substream(seed, i as u64);
            f(&mut rng, n)
        })
        .collect()
}

/// Count of successes over `total` Bernoulli trials run in parallel.
pub fn parallel_count<F>(seed: u64, total: usize, f: F) -> usize
where
    F: Fn(&mut ChaCha8Rng) -> bool + Sync,
{
    parallel_chunks(seed, total, DEFAULT_CHUNK, |rng, n| (0..n).filter(|_| f(rng)).count())
        .into_iter()
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn chunk_results_are_reproducible() {
        let a = parallel_chunks(42, 10_000, 1000, |rng, n| (0..n).map(|_| rng.gen::<u32>() as u64).sum::<u64>());
        let b = parallel_chunks(42, 10_000, 1000, |rng, n| (0..n).map(|_| rng.gen::<u32>() as u64).sum::<u64>());
        assert_eq!(a, b);
        assert_eq!(a.len(), 10);
    }

    #[test]
    fn streams_differ() {
        let x: u64 = substream(1, 0).gen();
        let y: u64 = substream(1, 1).gen();
        assert_ne!(x, y);
    }
}
