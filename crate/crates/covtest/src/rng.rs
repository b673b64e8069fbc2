//! Deterministic RNG substreams for parallel resampling.
//!
//! Every randomized computation derives its generator from a master seed plus
//! a fixed index path (e.g. `[TEST, replicate]` or `[SIM, dataset, replicate]`).
//! The resulting stream depends only on those integers, never on thread
//! scheduling or chunking, so results are bit-identical for any thread count.

use rand_chacha::ChaCha12Rng;
use rand_chacha::rand_core::SeedableRng;
use serde::{Deserialize, Serialize};

/// Domain tags keeping unrelated substream families disjoint.
pub mod tag {
    pub const BOOTSTRAP: u64 = 1;
    pub const MC_QUANTILE: u64 = 2;
    pub const SIM_DATASET: u64 = 3;
    pub const ORACLE: u64 = 4;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// ChaCha12 stream keyed by `(master, path)` via splitmix64 chaining.
pub fn substream(master: u64, path: &[u64]) -> ChaCha12Rng {
    let mut state = splitmix64(master);
    for &part in path {
        state = splitmix64(state ^ splitmix64(part.wrapping_add(0xa076_1d64_78bd_642f)));
    }
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_mut(8) {
        state = splitmix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    ChaCha12Rng::from_seed(seed)
}

/// How replicate work is scheduled. Either way, replicate `r` uses the
/// substream `(master_seed, r)`, so results are identical.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum ChunkPolicy {
    /// Parallel over replicates via the global rayon pool.
    #[default]
    Parallel,
    /// Single-threaded loop; useful for debugging and determinism checks.
    Serial,
}

/// Seeding and scheduling for one resampling run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResamplingPlan {
    pub master_seed: u64,
    pub chunking: ChunkPolicy,
}

impl ResamplingPlan {
    pub fn new(master_seed: u64) -> Self {
        ResamplingPlan {
            master_seed,
            chunking: ChunkPolicy::Parallel,
        }
    }

    pub fn serial(master_seed: u64) -> Self {
        ResamplingPlan {
            master_seed,
            chunking: ChunkPolicy::Serial,
        }
    }
}

/// Maps `f` over `0..n` honoring the chunk policy.
pub fn map_indexed<T: Send>(
    policy: ChunkPolicy,
    n: usize,
    f: impl Fn(usize) -> T + Sync + Send,
) -> Vec<T> {
    use rayon::prelude::*;
    match policy {
        ChunkPolicy::Parallel => (0..n).into_par_iter().map(f).collect(),
        ChunkPolicy::Serial => (0..n).map(f).collect(),
    }
}
