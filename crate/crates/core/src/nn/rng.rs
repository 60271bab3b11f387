//! Seeded ChaCha8 streams. The algorithm is fixed so that a seed gives the
//! same numbers on every platform.

use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `stream` of `seed`, e.g. one per training example.
pub fn substream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Fills `data` with draws from U[-bound, bound].
pub fn uniform_fill(rng: &mut Rng, data: &mut [f64], bound: f64) {
    for v in data {
        *v = rng.gen_range(-bound..=bound);
    }
}
