//! Seed plumbing. Every generator draws from its own ChaCha stream so that
//! results depend only on `(seed, stream)` and never on call order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `stream` of the generator seeded by `seed`.
pub fn stream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Packs a small tag and two indices into a stream id.
pub fn stream_id(tag: u8, a: u32, b: u32) -> u64 {
    ((tag as u64) << 56) | (((a as u64) & 0x0fff_ffff) << 28) | ((b as u64) & 0x0fff_ffff)
}
