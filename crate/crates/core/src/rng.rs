//! Deterministic substream derivation for reproducible parallel sampling.
//!
//! Every sampled quantity is drawn from a counter-based generator keyed by
//! the run seed and a lane index, so results are independent of thread
//! count and iteration order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent stream `lane` of the generator keyed by `seed`.
pub fn substream(seed: u64, lane: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(lane);
    rng
}
