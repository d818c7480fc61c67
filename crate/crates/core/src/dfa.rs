//! Detrended fluctuation analysis.
//!
//! The profile (cumulative sum of the mean-subtracted series) is cut into
//! non-overlapping windows of size `n`, once from the start and once from the
//! end, so samples left over by one pass are covered by the other. Each window
//! is detrended with a least-squares polynomial of the given order and `F(n)`
//! is the rms of all pooled residuals. The exponent `α` is the OLS slope of
//! `log10 F` against `log10 n` over the fit range.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlation::{log_grid, Transform};
use crate::error::{Error, Result};
use crate::generators::SeriesPair;
use crate::stats::ols;

pub const MAX_ORDER: usize = 3;
const MIN_FIT_POINTS: usize = 5;

/// Fluctuation function and fitted scaling exponent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DfaResult {
    pub window_sizes: Vec<usize>,
    pub fluctuations: Vec<f64>,
    pub alpha: f64,
    pub fit_stderr: f64,
    pub fit_range: (usize, usize),
    pub order: usize,
}

/// Window grid and fit range for one analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DfaConfig {
    pub order: usize,
    /// Explicit windows; `None` selects the default log grid.
    pub windows: Option<Vec<usize>>,
    /// Explicit fit range; `None` selects `[16, N/8]`.
    pub fit_range: Option<(usize, usize)>,
}

impl Default for DfaConfig {
    fn default() -> Self {
        Self {
            order: 1,
            windows: None,
            fit_range: None,
        }
    }
}

impl DfaConfig {
    pub fn with_order(order: usize) -> Self {
        Self {
            order,
            ..Self::default()
        }
    }
}

/// Log-spaced windows, 20 per decade, from `max(2·(order+2), 8)` to `N/4`.
pub fn default_windows(n: usize, order: usize) -> Vec<usize> {
    let lo = (2 * (order + 2)).max(8);
    let hi = n / 4;
    if hi < lo {
        return Vec::new();
    }
    log_grid(lo, hi, 20)
}

pub fn default_fit_range(n: usize) -> (usize, usize) {
    (16, n / 8)
}

/// Orthonormal polynomial basis of degree ≤ `order` on `0..len`.
fn poly_basis(len: usize, order: usize) -> Vec<Vec<f64>> {
    let mid = (len as f64 - 1.0) / 2.0;
    let half = mid.max(1.0);
    let t: Vec<f64> = (0..len).map(|i| (i as f64 - mid) / half).collect();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(order + 1);
    for k in 0..=order {
        let mut v: Vec<f64> = t.iter().map(|x| x.powi(k as i32)).collect();
        // two Gram-Schmidt passes keep the basis orthogonal to rounding
        for _ in 0..2 {
            for b in &basis {
                let p: f64 = v.iter().zip(b).map(|(a, c)| a * c).sum();
                v.iter_mut().zip(b).for_each(|(a, c)| *a -= p * c);
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        v.iter_mut().for_each(|a| *a /= norm);
        basis.push(v);
    }
    basis
}

/// Sum of squared residuals after projecting `seg` off the basis.
fn residual_ss(seg: &[f64], basis: &[Vec<f64>], scratch: &mut Vec<f64>) -> f64 {
    scratch.clear();
    scratch.extend_from_slice(seg);
    for b in basis {
        let p: f64 = scratch.iter().zip(b).map(|(a, c)| a * c).sum();
        scratch.iter_mut().zip(b).for_each(|(a, c)| *a -= p * c);
    }
    scratch.iter().map(|a| a * a).sum()
}

fn fluctuation(profile: &[f64], n: usize, order: usize) -> f64 {
    let basis = poly_basis(n, order);
    let total = profile.len();
    let segments = total / n;
    let mut scratch = Vec::with_capacity(n);
    let mut ss = 0.0;
    for s in 0..segments {
        ss += residual_ss(&profile[s * n..(s + 1) * n], &basis, &mut scratch);
    }
    for s in 0..segments {
        let end = total - s * n;
        ss += residual_ss(&profile[end - n..end], &basis, &mut scratch);
    }
    (ss / (2 * segments * n) as f64).sqrt()
}

/// DFA of order `order` over the given windows (default grid if `None`).
pub fn dfa(x: &[f64], windows: Option<&[usize]>, order: usize) -> Result<DfaResult> {
    dfa_with(
        x,
        &DfaConfig {
            order,
            windows: windows.map(<[usize]>::to_vec),
            fit_range: None,
        },
    )
}

pub fn dfa_with(x: &[f64], config: &DfaConfig) -> Result<DfaResult> {
    let order = config.order;
    if order == 0 || order > MAX_ORDER {
        return Err(Error::param("order", format!("{order} not in 1..={MAX_ORDER}")));
    }
    let len = x.len();
    let windows = match &config.windows {
        Some(w) => {
            let mut w = w.clone();
            w.sort_unstable();
            w.dedup();
            w
        }
        None => default_windows(len, order),
    };
    let Some(&max_window) = windows.last() else {
        return Err(Error::param("x", format!("series of length {len} too short for DFA")));
    };
    if len < 4 * max_window {
        return Err(Error::param(
            "x",
            format!("series of length {len} shorter than 4 × largest window {max_window}"),
        ));
    }
    if windows[0] < order + 2 {
        return Err(Error::param(
            "windows",
            format!("window {} smaller than order + 2 = {}", windows[0], order + 2),
        ));
    }

    let mean = x.iter().sum::<f64>() / len as f64;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / len as f64;
    if !(var > 0.0) || !var.is_finite() {
        return Err(Error::Degenerate("series has zero variance".into()));
    }
    let profile: Vec<f64> = x
        .iter()
        .scan(0.0, |acc, v| {
            *acc += v - mean;
            Some(*acc)
        })
        .collect();

    let fluctuations: Vec<f64> = windows
        .par_iter()
        .map(|&n| fluctuation(&profile, n, order))
        .collect();
    if let Some(i) = fluctuations.iter().position(|f| !(*f > 0.0)) {
        return Err(Error::Degenerate(format!(
            "zero fluctuation at window {}",
            windows[i]
        )));
    }

    let fit_range = config.fit_range.unwrap_or_else(|| default_fit_range(len));
    let (lx, ly): (Vec<f64>, Vec<f64>) = windows
        .iter()
        .zip(&fluctuations)
        .filter(|(n, _)| **n >= fit_range.0 && **n <= fit_range.1)
        .map(|(n, f)| ((*n as f64).log10(), f.log10()))
        .unzip();
    if lx.len() < MIN_FIT_POINTS {
        return Err(Error::param(
            "fit_range",
            format!(
                "only {} windows inside fit range [{}, {}]; need {MIN_FIT_POINTS}",
                lx.len(),
                fit_range.0,
                fit_range.1
            ),
        ));
    }
    let fit = ols(&lx, &ly);

    Ok(DfaResult {
        window_sizes: windows,
        fluctuations,
        alpha: fit.slope,
        fit_stderr: fit.slope_stderr,
        fit_range,
        order,
    })
}

/// DFA of both components with the same windows: raw values for ARFIMA
/// pairs, absolute values for FIARCH pairs (raw when the process is unknown).
pub fn dfa_crossover_scan(pair: &SeriesPair, config: &DfaConfig) -> Result<(DfaResult, DfaResult)> {
    let y = pair
        .y
        .as_ref()
        .ok_or_else(|| Error::param("pair", "crossover scan needs two components"))?;
    let transform = match pair.process() {
        Some(p) if p.is_volatility() => Transform::Absolute,
        _ => Transform::Raw,
    };
    let rx = dfa_with(&transform.apply(&pair.x), config)?;
    let ry = dfa_with(&transform.apply(y), config)?;
    Ok((rx, ry))
}
