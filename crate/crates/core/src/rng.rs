//! Seeded, stream-addressable random number generation.
//!
//! Every stochastic routine takes a caller-owned [`RngStream`]. A stream is
//! fully determined by `(seed, stream_id)`, so parallel workers can each own
//! an independent stream and still reproduce bit-for-bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type RngStream = ChaCha8Rng;

pub fn stream(seed: u64, stream_id: u64) -> RngStream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}
