//! Seeded random streams and deterministic chunked map-reduce.
//!
//! Work of size `N` is cut into fixed chunks of [`CHUNK_SIZE`] items. Chunk `i`
//! draws from the ChaCha8 stream `stream_base + i` of the run seed, so the
//! output depends only on `(seed, stream_base, N)` and never on how many
//! worker threads execute the chunks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub const CHUNK_SIZE: usize = 4096;

/// Environment variable overriding the worker-thread count.
pub const WORKERS_ENV: &str = "FLAGBETA_WORKERS";

/// Generator for one stream of a run seed.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Separates the stream ranges of independent sampling tasks sharing one seed.
pub fn stream_base(task: u32) -> u64 {
    u64::from(task) << 32
}

/// One unit of chunked work.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Chunk {
    pub index: usize,
    /// Global index of the chunk's first item.
    pub start: usize,
    pub len: usize,
    /// Stream the chunk draws from.
    pub stream: u64,
}

pub fn chunks(total: usize, stream_base: u64) -> Vec<Chunk> {
    (0..total.div_ceil(CHUNK_SIZE))
        .map(|index| {
            let start = index * CHUNK_SIZE;
            Chunk { index, start, len: CHUNK_SIZE.min(total - start), stream: stream_base + index as u64 }
        })
        .collect()
}

/// Worker count from [`WORKERS_ENV`], if set to a positive integer.
pub fn configured_workers() -> Option<usize> {
    std::env::var(WORKERS_ENV).ok()?.trim().parse().ok().filter(|&n: &usize| n > 0)
}

/// Number of threads [`map_chunks`] will use.
pub fn worker_count() -> usize {
    configured_workers().unwrap_or_else(rayon::current_num_threads)
}

/// Runs `f` on every chunk in parallel, each with its own stream generator,
/// and returns the results in chunk order.
pub fn map_chunks<T, F>(total: usize, seed: u64, stream_base: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&Chunk, &mut ChaCha8Rng) -> T + Sync + Send,
{
    let work = chunks(total, stream_base);
    let run = || {
        work.par_iter()
            .map(|c| {
                let mut rng = stream_rng(seed, c.stream);
                f(c, &mut rng)
            })
            .collect()
    };
    match configured_workers() {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(run),
            Err(e) => {
                log::warn!("could not build a {n}-thread pool ({e}); using the global pool");
                run()
            }
        },
        None => run(),
    }
}
