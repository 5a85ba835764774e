//! Counter-based random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 stream addressed by
//! `(master seed, purpose, replica)`. Replica `i` always reads the same stream
//! no matter which worker thread runs it, so parallel and serial runs agree
//! bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// Tags separating independent uses of one master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Sample = 1,
    Numerator = 2,
    Denominator = 3,
    LocalControl = 4,
    Demo = 5,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for a sub-experiment, derived from the master seed and a tag.
pub fn derive_seed(master: u64, tag: u64) -> u64 {
    splitmix64(master ^ splitmix64(tag))
}

/// Stream for replica `replica` of the given purpose.
pub fn replica_stream(master: u64, purpose: Purpose, replica: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(master, purpose as u64));
    rng.set_stream(replica);
    rng
}
