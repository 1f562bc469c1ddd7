//! Seeded, partitioned Monte Carlo driver.
//!
//! Trials are cut into fixed-size chunks and every chunk draws from its own
//! ChaCha stream derived from `(seed, domain, chunk)`. The partition does not
//! depend on the rayon pool size, so results are identical for any thread
//! count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Trials per seed stream.
pub const CHUNK: usize = 2048;

/// Named stream domains so that unrelated draws never share a stream.
pub mod domain {
    pub const TRIALS: u64 = 1;
    pub const BASELINE: u64 = 2;
    pub const NOISE_LAB: u64 = 3;
    pub const DITHER_SAMPLES: u64 = 4;
    pub const DITHER_REFERENCE: u64 = 5;
    pub const DITHER_CANDIDATES: u64 = 6;
    pub const PROBES: u64 = 7;
    pub const LINDEBERG: u64 = 8;
    pub const POWER_CHECK: u64 = 9;
    pub const OUTER_CODE: u64 = 10;
}

pub fn stream_rng(seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((domain << 40) ^ index);
    rng
}

/// Derives an independent seed for a sub-experiment (splitmix64 finaliser).
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn chunks(trials: usize) -> impl IndexedParallelIterator<Item = (u64, usize)> {
    let n = trials.div_ceil(CHUNK);
    (0..n).into_par_iter().map(move |c| {
        let len = CHUNK.min(trials - c * CHUNK);
        (c as u64, len)
    })
}

/// Runs `trials` trials, each adding into a `width`-wide integer tally.
pub fn tally<F>(trials: usize, seed: u64, domain: u64, width: usize, trial: F) -> Vec<u64>
where
    F: Fn(&mut ChaCha8Rng, &mut [u64]) + Sync,
{
    chunks(trials)
        .map(|(c, len)| {
            let mut rng = stream_rng(seed, domain, c);
            let mut counts = vec![0u64; width];
            for _ in 0..len {
                trial(&mut rng, &mut counts);
            }
            counts
        })
        .reduce(
            || vec![0u64; width],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        )
}

/// Same as [`tally`] but the trial may fail; the first error in chunk order wins.
pub fn try_tally<F, E>(
    trials: usize,
    seed: u64,
    domain: u64,
    width: usize,
    trial: F,
) -> Result<Vec<u64>, E>
where
    F: Fn(&mut ChaCha8Rng, &mut [u64]) -> Result<(), E> + Sync,
    E: Send,
{
    let parts: Vec<Result<Vec<u64>, E>> = chunks(trials)
        .map(|(c, len)| {
            let mut rng = stream_rng(seed, domain, c);
            let mut counts = vec![0u64; width];
            for _ in 0..len {
                trial(&mut rng, &mut counts)?;
            }
            Ok(counts)
        })
        .collect();
    let mut total = vec![0u64; width];
    for part in parts {
        total.iter_mut().zip(part?).for_each(|(x, y)| *x += y);
    }
    Ok(total)
}

/// Draws one value per trial, returned in trial order.
pub fn collect<T, F>(trials: usize, seed: u64, domain: u64, draw: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng) -> T + Sync,
{
    chunks(trials)
        .flat_map_iter(|(c, len)| {
            let mut rng = stream_rng(seed, domain, c);
            (0..len).map(|_| draw(&mut rng)).collect::<Vec<_>>()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn tally_is_independent_of_pool_size() {
        let run = |threads| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| {
                tally(10_000, 7, domain::TRIALS, 2, |rng, c| {
                    let x: f64 = rng.random();
                    c[usize::from(x < 0.3)] += 1;
                })
            })
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn collect_preserves_order_and_count() {
        let a = collect(5000, 3, domain::NOISE_LAB, |rng| rng.random::<u32>());
        let b = collect(5000, 3, domain::NOISE_LAB, |rng| rng.random::<u32>());
        assert_eq!(a.len(), 5000);
        assert_eq!(a, b);
        let c = collect(5000, 4, domain::NOISE_LAB, |rng| rng.random::<u32>());
        assert_ne!(a, c);
    }
}
