//! Shared inputs for the benchmarks.

use fraccouple::rng::{NoiseStream, Stream};

/// Unit Gaussian white noise.
pub fn white_noise(n: usize, seed: u64) -> Vec<f64> {
    let mut s = NoiseStream::new(seed, Stream::X);
    (0..n).map(|_| s.gaussian()).collect()
}
