//! Counter-based random streams.
//!
//! Every random quantity is addressed by `(master seed, purpose, index, step)`:
//! the ChaCha8 key is built from the seed and the purpose tag, the ChaCha
//! stream (nonce) is the particle or trial index, and the word position is the
//! global step index times a fixed per-step stride. Any scheduling of the work
//! therefore sees the same numbers.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Domain-separation tag mixed into the ChaCha key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Increment = 1,
    Initial = 2,
    LawCopy = 3,
    Subsample = 4,
    Bridge = 5,
    Assumption = 6,
    SpdeNoise = 7,
    SpdeInit = 8,
}

/// All streams for one `(seed, purpose)` pair.
#[derive(Clone)]
pub struct StreamFamily {
    base: ChaCha8Rng,
}

impl StreamFamily {
    pub fn new(seed: u64, purpose: Purpose) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        key[8..16].copy_from_slice(&(purpose as u64).to_le_bytes());
        StreamFamily {
            base: ChaCha8Rng::from_seed(key),
        }
    }

    /// Generator positioned at word 0 of stream `index`.
    pub fn stream(&self, index: u64) -> ChaCha8Rng {
        let mut rng = self.base.clone();
        rng.set_stream(index);
        rng.set_word_pos(0);
        rng
    }
}

/// Uniform on `(0, 1]` from the top 53 bits.
#[inline]
pub fn open_unit(bits: u64) -> f64 {
    ((bits >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[inline]
fn box_muller(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let u1 = open_unit(rng.next_u64());
    let u2 = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    let radius = (-2.0 * u1.ln()).sqrt();
    let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
    (radius * c, radius * s)
}

/// Standard normal vectors of length `m`, one per step, with a fixed number of
/// words consumed per step so that step `k` can also be reached directly.
pub struct GaussianStream {
    rng: ChaCha8Rng,
    m: usize,
}

impl GaussianStream {
    /// ChaCha words (u32) consumed per step.
    pub fn words_per_step(m: usize) -> u128 {
        4 * m.div_ceil(2) as u128
    }

    pub fn new(family: &StreamFamily, index: u64, m: usize, start_step: u64) -> Self {
        let mut rng = family.stream(index);
        rng.set_word_pos(start_step as u128 * Self::words_per_step(m));
        GaussianStream { rng, m }
    }

    pub fn next_step(&mut self, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.m);
        let mut chunks = out.chunks_mut(2);
        for _ in 0..self.m.div_ceil(2) {
            let (a, b) = box_muller(&mut self.rng);
            match chunks.next() {
                Some([x, y]) => {
                    *x = a;
                    *y = b;
                }
                Some([x]) => *x = a,
                _ => {}
            }
        }
    }
}

/// Random access to the standard normals of `(index, step)`.
pub fn standard_normals(family: &StreamFamily, index: u64, step: u64, out: &mut [f64]) {
    GaussianStream::new(family, index, out.len(), step).next_step(out);
}

/// One uniform per step from a fixed two-word slot.
pub struct UniformStream {
    rng: ChaCha8Rng,
}

impl UniformStream {
    pub fn new(family: &StreamFamily, index: u64, start_step: u64) -> Self {
        let mut rng = family.stream(index);
        rng.set_word_pos(2 * start_step as u128);
        UniformStream { rng }
    }

    pub fn next_step(&mut self) -> f64 {
        open_unit(self.rng.next_u64())
    }
}
