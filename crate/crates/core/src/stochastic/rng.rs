use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Seed of sample `index` in `stream`, derived from the global seed by
/// random access into a ChaCha8 keystream. The value depends only on
/// `(global, stream, index)`, never on evaluation order.
pub fn sample_seed(global: u64, stream: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(global);
    rng.set_stream(stream);
    rng.set_word_pos(2 * index as u128);
    rng.next_u64()
}

/// Generator for everything drawn inside one sample.
pub fn sample_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stream used for re-drawing a failed sample.
pub const RETRY_STREAM_OFFSET: u64 = 1 << 32;
