//! Seeded random streams.
//!
//! Every sampling operation takes an explicit generator. Independent sub-tasks
//! (per-trial loops, per-experiment lineages) get their own stream derived from a
//! parent seed and a label so that results do not depend on execution order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent generator for stream `label` under `seed`.
pub fn derived(seed: u64, label: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(label);
    rng
}

/// Draws a fresh child generator from `parent`.
pub fn split(parent: &mut SimRng) -> SimRng {
    use rand::RngCore;
    ChaCha8Rng::seed_from_u64(parent.next_u64())
}
