//! Fractional weights `a_n(d) = d Γ(n−d) / (Γ(1−d) Γ(n+1))`.
//!
//! The weights are the coefficients of the AR(∞) representation of a
//! fractionally integrated process, `1 − Σ a_n zⁿ = (1 − z)^d`. They are
//! evaluated with the ratio recurrence `a_{n+1} = a_n (n − d)/(n + 1)` seeded at
//! `a_1 = d`, which stays exact to rounding at lags where `Γ(n − d)` itself
//! would overflow a double.

use crate::error::{Error, Result};

/// Default truncation length for generator kernels.
pub const DEFAULT_KERNEL_LEN: usize = 10_000;

/// Truncated fractional weight sequence `a_1..a_L` for one scaling parameter.
///
/// Immutable once built; share it freely between workers.
#[derive(Debug, Clone, PartialEq)]
pub struct FracKernel {
    d: f64,
    weights: Vec<f64>,
    tail_mass: f64,
}

impl FracKernel {
    /// Builds the first `len` weights for scaling parameter `d ∈ (−0.5, 0.5)`.
    pub fn new(d: f64, len: usize) -> Result<Self> {
        if !(d > -0.5 && d < 0.5) {
            return Err(Error::param("d", format!("{d} not in (-0.5, 0.5)")));
        }
        if len == 0 {
            return Err(Error::param("len", "kernel length must be at least 1"));
        }

        let mut weights = Vec::with_capacity(len);
        let mut a = d;
        weights.push(a);
        for n in 1..len {
            let n = n as f64;
            a *= (n - d) / (n + 1.0);
            weights.push(a);
        }

        let tail_mass = 1.0 - neumaier_sum(&weights);
        Ok(Self {
            d,
            weights,
            tail_mass,
        })
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    /// Weights in lag order, `weights()[0] == a_1`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `1 − Σ_{n≤L} a_n`, the weight mass cut off by truncation.
    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    /// Returns `a_n` for `1 ≤ n ≤ L`.
    pub fn weight_at(&self, n: usize) -> Result<f64> {
        if n == 0 || n > self.weights.len() {
            return Err(Error::Index {
                index: n,
                len: self.weights.len(),
            });
        }
        Ok(self.weights[n - 1])
    }

    /// Weights rescaled so the truncated sequence sums to one.
    ///
    /// Used by the volatility generators, whose unit-mean condition relies on
    /// the full weight mass. Falls back to the raw weights when `d == 0`.
    pub fn normalized_weights(&self) -> Vec<f64> {
        let mass = 1.0 - self.tail_mass;
        if mass == 0.0 {
            return self.weights.clone();
        }
        self.weights.iter().map(|w| w / mass).collect()
    }

    /// Weights reversed (`a_L, …, a_1`) for dot products against a history
    /// stored oldest-first.
    pub(crate) fn reversed(weights: &[f64]) -> Vec<f64> {
        weights.iter().rev().copied().collect()
    }
}

/// Convenience wrapper matching the library's free-function API.
pub fn build_kernel(d: f64, len: usize) -> Result<FracKernel> {
    FracKernel::new(d, len)
}

pub fn weight_at(kernel: &FracKernel, n: usize) -> Result<f64> {
    kernel.weight_at(n)
}

/// Compensated summation; partial sums over 10⁶ weights otherwise lose
/// several digits of the tail mass.
pub(crate) fn neumaier_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}
