//! Deterministic seed derivation.
//!
//! Every source of randomness in the crate is a ChaCha stream keyed by an
//! FNV-1a hash of a master seed plus a stream tag (and, where needed, the
//! identifying indices of the consumer: config, trial, epoch). This keeps
//! runs reproducible across machines and makes independent child streams
//! explicit instead of sharing one RNG by side effect.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf29ce484222325;
const FNV_PRIME: u64 = 0x100000001b3;

/// Stream tags for child RNGs derived from a run's master seed.
pub mod stream {
    pub const SAMPLER: u64 = 0;
    pub const MCMC: u64 = 2;
    pub const FOREST: u64 = 3;
}

/// 64-bit FNV-1a over a sequence of u64 words (each fed little-endian).
pub fn fnv1a(words: &[u64]) -> u64 {
    let mut h = FNV_OFFSET;
    for w in words {
        for b in w.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(FNV_PRIME);
        }
    }
    h
}

/// Child RNG for (master seed, tag, extra key material).
pub fn child_rng(master: u64, tag: u64, extra: &[u64]) -> ChaCha8Rng {
    let mut words = Vec::with_capacity(2 + extra.len());
    words.push(master);
    words.push(tag);
    words.extend_from_slice(extra);
    ChaCha8Rng::seed_from_u64(fnv1a(&words))
}
