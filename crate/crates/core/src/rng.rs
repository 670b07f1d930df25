//! Seeded, splittable random streams.
//!
//! A stream is identified by a 64-bit seed plus a tuple of integer labels
//! (trial index, setting, ...). The labels are mixed into the ChaCha stream
//! id, so streams for distinct labels are independent and reproducible no
//! matter which thread draws them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a label tuple into a single stream id.
pub fn stream_id(labels: &[u64]) -> u64 {
    labels
        .iter()
        .fold(0x6a09_e667_f3bc_c909, |acc, &l| splitmix64(acc ^ splitmix64(l)))
}

/// Generator for `seed` on the stream selected by `labels`.
pub fn stream_rng(seed: u64, labels: &[u64]) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(labels));
    rng
}
