//! Seeded, stream-split randomness for audits.
//!
//! Every audit derives its generator from a user seed and a fixed stream tag
//! so that independent audits never share a stream and reruns are
//! reproducible.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags, one per randomized audit.
pub mod stream {
    pub const BODY_PAIRS: u64 = 1;
    pub const LIPSCHITZ_AUDIT: u64 = 2;
    pub const EXTRA_PROPERTY: u64 = 3;
    pub const STABILITY: u64 = 4;
    pub const REGULARITY: u64 = 5;
    pub const INVARIANCE: u64 = 6;
    pub const MULTISTART: u64 = 7;
    pub const TANGENCY: u64 = 8;
}

/// ChaCha8 generator for `(seed, stream)`.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}
