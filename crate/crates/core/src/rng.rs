//! Deterministic RNG streams for parallel Monte Carlo.
//!
//! Every replicate, iteration or batch draws from its own ChaCha stream
//! derived from `(master_seed, index)`. Work items can therefore run on any
//! number of threads and still produce bit-identical results, because no
//! stream is ever shared and per-item outputs are combined in index order.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// RNG stream for work item `index` under `master` seed.
pub fn stream(master: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng
}

/// Two-level stream: `group` (e.g. a table cell) and `item` (e.g. a replicate).
///
/// Both components must stay below 2^32.
pub fn substream(master: u64, group: u64, item: u64) -> ChaCha8Rng {
    debug_assert!(group < (1 << 32) && item < (1 << 32));
    stream(master, (group << 32) | item)
}
