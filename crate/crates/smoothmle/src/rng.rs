//! Deterministic random streams.
//!
//! A single 64-bit master seed is expanded into independent sub-streams keyed
//! by a purpose label and an index, so results do not depend on the order in
//! which work items are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, StandardNormal};

/// Stream type used throughout the crate.
pub type StreamRng = ChaCha8Rng;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn hash_label(label: &str) -> u64 {
    // FNV-1a
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Derives a sub-seed from `(seed, label, indices)`.
pub fn derive_seed(seed: u64, label: &str, indices: &[u64]) -> u64 {
    let mut h = mix64(seed ^ 0x9e37_79b9_7f4a_7c15);
    h = mix64(h ^ hash_label(label));
    for &i in indices {
        h = mix64(h.wrapping_add(0x9e37_79b9_7f4a_7c15) ^ mix64(i.wrapping_add(1)));
    }
    h
}

/// A ChaCha8 stream for `(seed, label, indices)`.
pub fn stream(seed: u64, label: &str, indices: &[u64]) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(seed, label, indices))
}

/// Source of standard normal draws used to perturb samples.
pub trait NoiseSource {
    fn standard_normal(&mut self) -> f64;
}

impl NoiseSource for StreamRng {
    fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(self)
    }
}

/// Noise source that always returns zero; a test hook for the perturbation step.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroNoise;

impl NoiseSource for ZeroNoise {
    fn standard_normal(&mut self) -> f64 {
        0.0
    }
}

/// Replays a fixed list of standard normal draws, then zeros.
#[derive(Debug, Clone)]
pub struct ReplayNoise<'a> {
    draws: &'a [f64],
    pos: usize,
}

impl<'a> ReplayNoise<'a> {
    pub fn new(draws: &'a [f64]) -> Self {
        Self { draws, pos: 0 }
    }
}

impl NoiseSource for ReplayNoise<'_> {
    fn standard_normal(&mut self) -> f64 {
        let v = self.draws.get(self.pos).copied().unwrap_or(0.0);
        self.pos += 1;
        v
    }
}
