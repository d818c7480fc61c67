//! Seeded noise streams.
//!
//! Every run draws from ChaCha20 keyed by the 64-bit run seed
//! (`ChaCha20Rng::seed_from_u64`). Independent sub-generators are separate
//! ChaCha stream ids under the same key, so the x-innovations of a coupled run
//! are exactly the innovations a single-component run with the same seed sees.
//!
//! Gaussian variates use the Box–Muller transform on 53-bit uniforms taken
//! from the top bits of `next_u64`:
//!
//! ```text
//! u1 = (k1 + 1) / 2^53, u2 = k2 / 2^53        (u1 ∈ (0, 1], u2 ∈ [0, 1))
//! r  = sqrt(-2 ln u1)
//! z1 = r cos(2π u2), z2 = r sin(2π u2)        (z1 returned first)
//! ```
//!
//! This transform is part of the output contract: changing it changes every
//! generated series.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use std::f64::consts::TAU;

/// ChaCha stream ids for the sub-generators of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    /// Innovations `ε_t` driving the first component.
    X = 0,
    /// Innovations `ε̃_t` driving the second component.
    Y = 1,
    /// Phase draws for the first component of a surrogate.
    PhaseX = 2,
    /// Phase draws for the second component of a surrogate.
    PhaseY = 3,
}

/// Uniform and standard normal draws from one ChaCha20 stream.
#[derive(Debug, Clone)]
pub struct NoiseStream {
    rng: ChaCha20Rng,
    spare: Option<f64>,
}

impl NoiseStream {
    pub fn new(seed: u64, stream: Stream) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream as u64);
        Self { rng, spare: None }
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `(0, 1]`.
    fn uniform_open0(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn gaussian(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.uniform_open0();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (TAU * u2).sin_cos();
        self.spare = Some(r * s);
        r * c
    }
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-run seed for ensemble member `member` of grid point `grid_index`:
/// `mix64(mix64(mix64(master) ^ grid_index) ^ member)`.
pub fn derive_seed(master: u64, grid_index: u64, member: u64) -> u64 {
    mix64(mix64(mix64(master) ^ grid_index) ^ member)
}
