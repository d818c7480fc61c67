//! Fourier phase-randomization surrogates.
//!
//! The surrogate keeps `|X_k|` for every frequency and replaces the phase of
//! each positive, non-self-conjugate bin with a uniform draw on `[0, 2π)`. The
//! matching negative-frequency bin is set to the exact complex conjugate, so
//! the inverse transform is real up to rounding. The DC bin is untouched and
//! the Nyquist bin of an even-length series keeps its magnitude with a random
//! sign.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::generators::SeriesPair;
use crate::rng::{NoiseStream, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurrogateMode {
    /// Independent phase draws for x and y.
    #[default]
    Independent,
    /// The same phase draws applied to both series; keeps cross-spectral
    /// phase relationships and therefore cross-correlations.
    SharedShuffle,
}

impl FromStr for SurrogateMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "independent" => Ok(Self::Independent),
            "shared_shuffle" | "shared-shuffle" => Ok(Self::SharedShuffle),
            other => Err(Error::param(
                "mode",
                format!("unknown surrogate mode `{other}` (expected independent or shared_shuffle)"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurrogateSpec {
    pub mode: SurrogateMode,
    pub seed: u64,
    pub n_surrogates: usize,
}

impl SurrogateSpec {
    pub fn new(mode: SurrogateMode, seed: u64) -> Self {
        Self {
            mode,
            seed,
            n_surrogates: 1,
        }
    }
}

fn forward(x: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

/// Amplitude spectrum `|X_k|`, `k = 0..N`.
pub fn amplitude_spectrum(x: &[f64]) -> Vec<f64> {
    forward(x).iter().map(|c| c.norm()).collect()
}

/// Result of one inverse transform, with the largest imaginary residue.
struct Realized {
    values: Vec<f64>,
    max_imag: f64,
}

fn randomize_with(x: &[f64], phases: &mut NoiseStream) -> Result<Realized> {
    let n = x.len();
    if n < 4 {
        return Err(Error::param("x", format!("surrogate needs at least 4 samples, got {n}")));
    }
    let mut spec = forward(x);
    for k in 1..(n + 1) / 2 {
        let amp = spec[k].norm();
        let phi = TAU * phases.uniform();
        let z = Complex64::from_polar(amp, phi);
        spec[k] = z;
        spec[n - k] = z.conj();
    }
    if n % 2 == 0 {
        let half = n / 2;
        let amp = spec[half].norm();
        let sign = if phases.uniform() < 0.5 { 1.0 } else { -1.0 };
        spec[half] = Complex64::new(sign * amp, 0.0);
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut spec);
    let scale = 1.0 / n as f64;
    let max_imag = spec.iter().map(|c| (c.im * scale).abs()).fold(0.0, f64::max);
    Ok(Realized {
        values: spec.iter().map(|c| c.re * scale).collect(),
        max_imag,
    })
}

/// Phase-randomized surrogate of `x`.
pub fn phase_randomize(x: &[f64], seed: u64) -> Result<Vec<f64>> {
    let mut phases = NoiseStream::new(seed, Stream::PhaseX);
    Ok(randomize_with(x, &mut phases)?.values)
}

/// Largest imaginary component left after the inverse transform, relative to
/// the RMS of the surrogate. Diagnostic for the realness guarantee.
pub fn imaginary_leakage(x: &[f64], seed: u64) -> Result<f64> {
    let mut phases = NoiseStream::new(seed, Stream::PhaseX);
    let r = randomize_with(x, &mut phases)?;
    let rms = (r.values.iter().map(|v| v * v).sum::<f64>() / r.values.len() as f64).sqrt();
    Ok(r.max_imag / rms)
}

/// Surrogate of both components of a pair.
///
/// `Independent` draws x-phases and y-phases from separate ChaCha streams
/// under `spec.seed`; `SharedShuffle` reuses the x-phase stream for y.
pub fn surrogate_pair(pair: &SeriesPair, spec: &SurrogateSpec) -> Result<SeriesPair> {
    let mut px = NoiseStream::new(spec.seed, Stream::PhaseX);
    let x = randomize_with(&pair.x, &mut px)?.values;
    let y = match &pair.y {
        None => None,
        Some(y) => {
            let mut py = match spec.mode {
                SurrogateMode::Independent => NoiseStream::new(spec.seed, Stream::PhaseY),
                SurrogateMode::SharedShuffle => NoiseStream::new(spec.seed, Stream::PhaseX),
            };
            Some(randomize_with(y, &mut py)?.values)
        }
    };
    Ok(SeriesPair {
        x,
        y,
        params: pair.params.clone(),
        stats: pair.stats.clone(),
        surrogate: true,
    })
}

/// `spec.n_surrogates` surrogates, the `i`-th seeded with
/// `derive_seed(spec.seed, 0, i)`.
pub fn surrogate_ensemble(pair: &SeriesPair, spec: &SurrogateSpec) -> Result<Vec<SeriesPair>> {
    use rayon::prelude::*;
    if spec.n_surrogates == 0 {
        return Err(Error::param("n_surrogates", "must be at least 1"));
    }
    (0..spec.n_surrogates as u64)
        .into_par_iter()
        .map(|i| {
            let sub = SurrogateSpec {
                seed: crate::rng::derive_seed(spec.seed, 0, i),
                n_surrogates: 1,
                ..*spec
            };
            surrogate_pair(pair, &sub)
        })
        .collect()
}
