//! Deterministic randomness plumbing.
//!
//! Every experiment draws all of its randomness from one root seed. Sub-
//! streams are derived by hashing a string label into the root with
//! FNV-1a and finalizing with the splitmix64 mixer, so any sub-experiment
//! can be reproduced in isolation from `(root_seed, label)` alone.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf29ce484222325;
const FNV_PRIME: u64 = 0x100000001b3;

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Derives labeled child seeds and RNG streams from a root seed.
#[derive(Debug, Clone, Copy)]
pub struct SeedSplitter {
    root: u64,
}

impl SeedSplitter {
    pub fn new(root: u64) -> Self {
        Self { root }
    }

    pub fn root(&self) -> u64 {
        self.root
    }

    /// Child seed for a labeled sub-stream.
    pub fn child(&self, label: &str) -> u64 {
        splitmix64(self.root ^ fnv1a(label.as_bytes()))
    }

    /// Child seed for an indexed sub-stream, e.g. one per sweep instance.
    pub fn child_indexed(&self, label: &str, index: u64) -> u64 {
        splitmix64(self.child(label) ^ splitmix64(index.wrapping_add(1)))
    }

    /// Deterministic RNG for a labeled sub-stream.
    pub fn rng(&self, label: &str) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.child(label))
    }

    /// Deterministic RNG for an indexed sub-stream.
    pub fn rng_indexed(&self, label: &str, index: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.child_indexed(label, index))
    }
}
