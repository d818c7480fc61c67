//! Sample auto- and cross-correlation estimators and the closed-form
//! autocorrelation of FIARCH absolute values.
//!
//! Lag-`n` estimates use the full-sample mean and variance and divide the lag
//! sum by `N`, not `N − n`. The resulting sequence is positive semidefinite and
//! bounded by one in magnitude.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use std::borrow::Cow;

use crate::error::{Error, Result};

/// Half-width `2/√N` of the white-noise band for sample correlations.
pub fn null_band(n: usize) -> f64 {
    2.0 / (n as f64).sqrt()
}

/// Strictly increasing lag grid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lags(Vec<usize>);

impl Lags {
    pub fn explicit(mut lags: Vec<usize>) -> Result<Self> {
        if lags.is_empty() {
            return Err(Error::param("lags", "empty lag grid"));
        }
        lags.sort_unstable();
        lags.dedup();
        Ok(Self(lags))
    }

    pub fn linear(start: usize, end: usize) -> Result<Self> {
        if start > end {
            return Err(Error::param("lags", format!("empty range {start}..={end}")));
        }
        Ok(Self((start..=end).collect()))
    }

    /// Rounded log-spaced lags, `per_decade` points per factor of ten,
    /// deduplicated. Both ends are included.
    pub fn log_spaced(start: usize, end: usize, per_decade: usize) -> Result<Self> {
        if start == 0 || start > end || per_decade == 0 {
            return Err(Error::param(
                "lags",
                format!("bad log grid {start}..={end} with {per_decade}/decade"),
            ));
        }
        Ok(Self(log_grid(start, end, per_decade)))
    }

    /// Default grid for a series of length `n`: log-spaced, 25 per decade,
    /// from 1 to `n/100`.
    pub fn default_for(n: usize) -> Result<Self> {
        Self::log_spaced(1, (n / 100).max(1), 25)
    }

    /// Parses `log:START:END[:PER_DECADE]`, `lin:START:END` or a comma list.
    pub fn parse(spec: &str) -> Result<Self> {
        let bad = |why: &str| Error::param("lags", format!("`{spec}`: {why}"));
        let num = |s: &str| s.trim().parse::<usize>().map_err(|_| bad("expected integers"));
        let parts: Vec<&str> = spec.split(':').collect();
        match parts.as_slice() {
            ["log", a, b] => Self::log_spaced(num(a)?, num(b)?, 25),
            ["log", a, b, k] => Self::log_spaced(num(a)?, num(b)?, num(k)?),
            ["lin", a, b] => Self::linear(num(a)?, num(b)?),
            [list] => Self::explicit(list.split(',').map(num).collect::<Result<_>>()?),
            _ => Err(bad("expected log:A:B[:K], lin:A:B or a comma-separated list")),
        }
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn max(&self) -> usize {
        *self.0.last().expect("lag grid is never empty")
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub(crate) fn log_grid(start: usize, end: usize, per_decade: usize) -> Vec<usize> {
    let lo = (start as f64).log10();
    let hi = (end as f64).log10();
    let steps = ((hi - lo) * per_decade as f64).ceil() as usize;
    let mut out: Vec<usize> = (0..=steps)
        .map(|i| {
            let e = lo + (hi - lo) * i as f64 / steps.max(1) as f64;
            (10f64.powf(e).round() as usize).clamp(start, end)
        })
        .collect();
    out.push(start);
    out.push(end);
    out.sort_unstable();
    out.dedup();
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrKind {
    Auto,
    Cross,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transform {
    #[default]
    Raw,
    Absolute,
}

impl Transform {
    pub fn apply<'a>(&self, xs: &'a [f64]) -> Cow<'a, [f64]> {
        match self {
            Transform::Raw => Cow::Borrowed(xs),
            Transform::Absolute => Cow::Owned(xs.iter().map(|v| v.abs()).collect()),
        }
    }
}

/// Correlation estimates over a lag grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrFunction {
    pub lags: Vec<usize>,
    pub values: Vec<f64>,
    /// Number of overlapping pairs behind each estimate, `N − n`.
    pub n_samples: Vec<usize>,
    pub kind: CorrKind,
    pub transform: Transform,
}

impl CorrFunction {
    /// Estimate at `lag`, if it is on the grid.
    pub fn at(&self, lag: usize) -> Option<f64> {
        self.lags.binary_search(&lag).ok().map(|i| self.values[i])
    }

    /// Fraction of estimates with `|value| ≤ band`, ignoring lag 0.
    pub fn fraction_within(&self, band: f64) -> f64 {
        let vals: Vec<f64> = self
            .lags
            .iter()
            .zip(&self.values)
            .filter(|(l, _)| **l > 0)
            .map(|(_, v)| *v)
            .collect();
        if vals.is_empty() {
            return 1.0;
        }
        vals.iter().filter(|v| v.abs() <= band).count() as f64 / vals.len() as f64
    }
}

struct Centered {
    values: Vec<f64>,
    scale: f64,
}

fn center(xs: &[f64], name: &str) -> Result<Centered> {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let values: Vec<f64> = xs.iter().map(|v| v - mean).collect();
    let var = values.iter().map(|v| v * v).sum::<f64>() / n;
    if !(var > 0.0) || !var.is_finite() {
        return Err(Error::Degenerate(format!(
            "series `{name}` has zero variance; correlation undefined"
        )));
    }
    Ok(Centered {
        values,
        scale: var.sqrt(),
    })
}

fn check_len(n: usize, lags: &Lags) -> Result<()> {
    let max = lags.max();
    if max >= n || n <= max + 2 {
        return Err(Error::param(
            "lags",
            format!("maximum lag {max} too large for series of length {n}"),
        ));
    }
    Ok(())
}

/// `Σ_{t=n}^{N−1} a_t b_{t−n} / N`
fn lagged_cov(a: &[f64], b: &[f64], lag: usize) -> f64 {
    let n = a.len();
    a[lag..].iter().zip(&b[..n - lag]).map(|(p, q)| p * q).sum::<f64>() / n as f64
}

/// Sample autocorrelation `A(n)` of `x` at each lag of the grid.
pub fn autocorr(x: &[f64], lags: &Lags) -> Result<CorrFunction> {
    check_len(x.len(), lags)?;
    let c = center(x, "x")?;
    let denom = c.scale * c.scale;
    let values = lags
        .as_slice()
        .par_iter()
        .map(|&lag| {
            if lag == 0 {
                1.0
            } else {
                lagged_cov(&c.values, &c.values, lag) / denom
            }
        })
        .collect();
    Ok(CorrFunction {
        lags: lags.as_slice().to_vec(),
        values,
        n_samples: lags.as_slice().iter().map(|l| x.len() - l).collect(),
        kind: CorrKind::Auto,
        transform: Transform::Raw,
    })
}

/// Sample cross-correlation `C(n) = corr(x_t, y_{t−n})` for `n ≥ 0`.
///
/// Negative lags are obtained by swapping the arguments.
pub fn crosscorr(x: &[f64], y: &[f64], lags: &Lags) -> Result<CorrFunction> {
    if x.len() != y.len() {
        return Err(Error::param(
            "y",
            format!("length {} differs from x length {}", y.len(), x.len()),
        ));
    }
    check_len(x.len(), lags)?;
    let cx = center(x, "x")?;
    let cy = center(y, "y")?;
    let denom = cx.scale * cy.scale;
    let values = lags
        .as_slice()
        .par_iter()
        .map(|&lag| lagged_cov(&cx.values, &cy.values, lag) / denom)
        .collect();
    Ok(CorrFunction {
        lags: lags.as_slice().to_vec(),
        values,
        n_samples: lags.as_slice().iter().map(|l| x.len() - l).collect(),
        kind: CorrKind::Cross,
        transform: Transform::Raw,
    })
}

/// [`autocorr`] of `transform(x)`, recording the transform.
pub fn autocorr_of(x: &[f64], lags: &Lags, transform: Transform) -> Result<CorrFunction> {
    let mut out = autocorr(&transform.apply(x), lags)?;
    out.transform = transform;
    Ok(out)
}

/// [`crosscorr`] of `transform(x)` and `transform(y)`, recording the transform.
pub fn crosscorr_of(x: &[f64], y: &[f64], lags: &Lags, transform: Transform) -> Result<CorrFunction> {
    let mut out = crosscorr(&transform.apply(x), &transform.apply(y), lags)?;
    out.transform = transform;
    Ok(out)
}

/// Autocorrelation of `|x_t|` for a FIARCH process with parameter `d`:
/// `Γ(1−d) Γ(n+d) / (Γ(d) Γ(n+1−d))`.
pub fn fiarch_acf_oracle(d: f64, n: usize) -> Result<f64> {
    if !(d > 0.0 && d < 0.5) {
        return Err(Error::param("d", format!("{d} not in (0, 0.5)")));
    }
    if n == 0 {
        return Err(Error::param("n", "lag must be at least 1"));
    }
    let n = n as f64;
    let log_ratio = (ln_gamma(1.0 - d) - ln_gamma(d)) + (ln_gamma(n + d) - ln_gamma(n + 1.0 - d));
    Ok(log_ratio.exp())
}
