//! Deterministic, splittable random streams.
//!
//! Every stream is a ChaCha8 generator keyed directly by its identity: the
//! 32-byte key is `master_seed ‖ stream_id ‖ index ‖ 0u64`, each word
//! little-endian. ChaCha output is specified bit-for-bit, so a given
//! `(seed, index)` yields the same sequence on every platform.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    #[serde(default)]
    pub stream_id: u64,
}

impl SeedSpec {
    pub const fn new(master_seed: u64) -> Self {
        Self {
            master_seed,
            stream_id: 0,
        }
    }

    pub const fn with_stream(master_seed: u64, stream_id: u64) -> Self {
        Self {
            master_seed,
            stream_id,
        }
    }
}

/// A pseudo-random stream owned by one call site.
#[derive(Debug, Clone)]
pub struct SampleStream {
    inner: ChaCha8Rng,
}

pub fn derive_stream(seed: SeedSpec, index: u64) -> SampleStream {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.master_seed.to_le_bytes());
    key[8..16].copy_from_slice(&seed.stream_id.to_le_bytes());
    key[16..24].copy_from_slice(&index.to_le_bytes());
    SampleStream {
        inner: ChaCha8Rng::from_seed(key),
    }
}

impl SampleStream {
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)` with 53 bits of resolution.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[-half_width, half_width]`.
    pub fn symmetric(&mut self, half_width: f64) -> f64 {
        half_width * (2.0 * self.next_f64() - 1.0)
    }

    /// Uniform integer in `0..=max`, by rejection (no modulo bias).
    pub fn uniform_inclusive(&mut self, max: u64) -> u64 {
        if max == u64::MAX {
            return self.next_u64();
        }
        let span = max + 1;
        let zone = u64::MAX - (u64::MAX % span) - 1;
        loop {
            let v = self.next_u64();
            if v <= zone {
                return v % span;
            }
        }
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        if p <= 0.0 {
            false
        } else if p >= 1.0 {
            true
        } else {
            self.next_f64() < p
        }
    }
}
