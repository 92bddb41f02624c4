//! Deterministic RNG substreams. Every randomized stage derives an
//! independent stream from the run seed plus a tag path (tuple index,
//! participant index, grid cell, iteration, ...), so results are identical
//! whether units of work run serially or in parallel, on any platform.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes `seed` with a tag path into one stream key.
pub fn stream_key(seed: u64, tags: &[u64]) -> u64 {
    let mut state = seed;
    let mut key = splitmix64(&mut state);
    for &tag in tags {
        state ^= tag.wrapping_mul(0xA24B_AED4_963E_E407);
        key ^= splitmix64(&mut state);
    }
    key
}

/// An independent, reproducible RNG for the given seed and tag path.
pub fn substream(seed: u64, tags: &[u64]) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(stream_key(seed, tags))
}

/// Leading tags per randomized stage. Distinct leads keep stages from ever
/// sharing a stream even when their remaining path elements collide.
pub mod tags {
    /// Synthetic tuple generation, path (TUPLE, tuple index).
    pub const TUPLE: u64 = 1;
    /// Feedback simulation, path (PARTICIPANT, participant index).
    pub const PARTICIPANT: u64 = 2;
    /// Preference-weight initialization, path (LEARNER_INIT,).
    pub const LEARNER_INIT: u64 = 3;
    /// Experiment grid work unit, path (CELL, cell index, iteration, stage).
    pub const CELL: u64 = 4;
    /// Population draw, path (POPULATION, participant index).
    pub const POPULATION: u64 = 5;
    /// Tuple subsampling inside an experiment iteration.
    pub const SAMPLER: u64 = 6;
}
