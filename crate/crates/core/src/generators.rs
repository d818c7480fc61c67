//! Single and two-component ARFIMA and FIARCH generators.
//!
//! All four processes share the same machinery: a truncated fractional kernel,
//! a ring-buffered history of the last `L` values (raw values for ARFIMA,
//! absolute values for FIARCH) and a blocked dot product per step. Lagged
//! values before the first step are zero for ARFIMA. For FIARCH they are set
//! to the stationary mean `√(2/π)` of `|x_t|`, since an all-zero history would
//! leave the volatility at zero forever. The first `burn_in` samples are
//! discarded.
//!
//! FIARCH volatilities are normalized by `μ = ⟨|x_t|⟩`. The weight mass cut
//! off by truncation enters the volatility through its expectation,
//!
//! ```text
//! σ_t = tail_mass + Σ_{n≤L} a_n |x_{t−n}| / μ
//! ```
//!
//! which keeps the truncated recursion stationary. With [`MuMode::Running`]
//! (the default) `μ` is the running mean of `|x_t|` over everything generated
//! so far, seeded with one pseudo-observation at `√(2/π)`. This pins the
//! realized volatility level close to 1 in every run, at the price of a weak
//! negative feedback that pulls the `|x_t|` correlations slightly below the
//! infinite-kernel values. [`MuMode::Stationary`] uses the exact stationary
//! value `√(2/π)`; the correlations are then unbiased, but the realized
//! volatility mean of a single run wanders like any long-memory sample mean.

use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_2_PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::kernel::{FracKernel, DEFAULT_KERNEL_LEN};
use crate::rng::{NoiseStream, Stream};

/// Default series length, 2^17.
pub const DEFAULT_N: usize = 1 << 17;

/// Steps between stability checks of the running volatility mean.
const STABILITY_CHECK_EVERY: usize = 4096;
/// First check. For d near 0.5 the volatility makes excursions lasting tens
/// of thousands of steps, so shorter averages say nothing about drift.
const STABILITY_WARMUP: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Process {
    Arfima,
    Arfima2,
    Fiarch,
    Fiarch2,
}

impl Process {
    pub fn is_coupled(self) -> bool {
        matches!(self, Process::Arfima2 | Process::Fiarch2)
    }

    /// Volatility processes are analyzed through `|x_t|`.
    pub fn is_volatility(self) -> bool {
        matches!(self, Process::Fiarch | Process::Fiarch2)
    }

    pub fn name(self) -> &'static str {
        match self {
            Process::Arfima => "arfima",
            Process::Arfima2 => "arfima2",
            Process::Fiarch => "fiarch",
            Process::Fiarch2 => "fiarch2",
        }
    }
}

impl fmt::Display for Process {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Process {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "arfima" => Ok(Process::Arfima),
            "arfima2" => Ok(Process::Arfima2),
            "fiarch" => Ok(Process::Fiarch),
            "fiarch2" => Ok(Process::Fiarch2),
            other => Err(Error::param(
                "process",
                format!("unknown process `{other}` (expected arfima, arfima2, fiarch or fiarch2)"),
            )),
        }
    }
}

/// Burn-in used when none is given: `10·L`, capped at 10^5, never below `L`.
pub fn default_burn_in(kernel_len: usize) -> usize {
    (10 * kernel_len).min(100_000).max(kernel_len)
}

/// How FIARCH generators obtain `μ = ⟨|x_t|⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MuMode {
    /// Running mean of the generated `|x_t|`.
    #[default]
    Running,
    /// `√(2/π)`, the exact stationary mean of `|x_t|`.
    Stationary,
}

impl FromStr for MuMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stationary" => Ok(MuMode::Stationary),
            "running" => Ok(MuMode::Running),
            other => Err(Error::param("mu", format!("unknown mode `{other}` (expected stationary or running)"))),
        }
    }
}

/// Full description of one generation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    pub process: Process,
    pub d1: f64,
    /// Ignored by single-component processes.
    pub d2: f64,
    /// Coupling strength; ignored by single-component processes.
    pub w: f64,
    pub n: usize,
    pub burn_in: usize,
    pub kernel_len: usize,
    pub seed: u64,
    /// Accept any `W ∈ [0, 1]` instead of `[0.5, 1]`.
    #[serde(default)]
    pub allow_full_w: bool,
    /// FIARCH only.
    #[serde(default)]
    pub mu_mode: MuMode,
}

impl GenParams {
    pub fn new(process: Process, d1: f64, d2: f64, w: f64) -> Self {
        Self {
            process,
            d1,
            d2,
            w,
            n: DEFAULT_N,
            burn_in: default_burn_in(DEFAULT_KERNEL_LEN),
            kernel_len: DEFAULT_KERNEL_LEN,
            seed: 0,
            allow_full_w: false,
            mu_mode: MuMode::Running,
        }
    }

    pub fn arfima(d: f64) -> Self {
        Self::new(Process::Arfima, d, 0.0, 1.0)
    }

    pub fn arfima2(d1: f64, d2: f64, w: f64) -> Self {
        Self::new(Process::Arfima2, d1, d2, w)
    }

    pub fn fiarch(d: f64) -> Self {
        Self::new(Process::Fiarch, d, 0.0, 1.0)
    }

    pub fn fiarch2(d1: f64, d2: f64, w: f64) -> Self {
        Self::new(Process::Fiarch2, d1, d2, w)
    }

    pub fn with_len(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    /// Sets the kernel truncation and resets burn-in to its default for it.
    pub fn with_kernel_len(mut self, kernel_len: usize) -> Self {
        self.kernel_len = kernel_len;
        self.burn_in = default_burn_in(kernel_len);
        self
    }

    pub fn with_burn_in(mut self, burn_in: usize) -> Self {
        self.burn_in = burn_in;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_mu_mode(mut self, mode: MuMode) -> Self {
        self.mu_mode = mode;
        self
    }

    pub fn with_full_w(mut self, allow: bool) -> Self {
        self.allow_full_w = allow;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::param("n", "series length must be at least 1"));
        }
        if self.kernel_len == 0 {
            return Err(Error::param("len", "kernel length must be at least 1"));
        }
        if self.burn_in < self.kernel_len {
            return Err(Error::param(
                "burn_in",
                format!(
                    "burn-in {} shorter than kernel length {}",
                    self.burn_in, self.kernel_len
                ),
            ));
        }
        match self.process {
            Process::Arfima => check_d("d1", self.d1, -0.5, false)?,
            Process::Arfima2 => {
                check_d("d1", self.d1, 0.0, true)?;
                check_d("d2", self.d2, 0.0, true)?;
                self.check_w()?;
            }
            Process::Fiarch => check_d("d1", self.d1, 0.0, false)?,
            Process::Fiarch2 => {
                check_d("d1", self.d1, 0.0, false)?;
                check_d("d2", self.d2, 0.0, false)?;
                self.check_w()?;
            }
        }
        Ok(())
    }

    fn check_w(&self) -> Result<()> {
        let w = self.w;
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::param("w", format!("{w} not in [0.5, 1] (or [0, 1] with --allow-full-w)")));
        }
        if w < 0.5 {
            if self.allow_full_w {
                log::warn!("coupling W = {w} below 0.5; accepted because the full range is allowed");
            } else {
                return Err(Error::param("w", format!("{w} not in [0.5, 1]")));
            }
        }
        Ok(())
    }
}

fn check_d(name: &'static str, d: f64, lower: f64, lower_inclusive: bool) -> Result<()> {
    let above = if lower_inclusive { d >= lower } else { d > lower };
    if above && d < 0.5 {
        return Ok(());
    }
    let open = if lower_inclusive { '[' } else { '(' };
    Err(Error::param(name, format!("{d} not in {open}{lower}, 0.5)")))
}

/// Generated series plus the run description and realized statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesPair {
    pub x: Vec<f64>,
    pub y: Option<Vec<f64>>,
    /// Absent for series loaded from files without metadata.
    pub params: Option<GenParams>,
    #[serde(default)]
    pub stats: GenStats,
    #[serde(default)]
    pub surrogate: bool,
}

/// Realized quantities recorded alongside generated output.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GenStats {
    pub tail_mass_x: Option<f64>,
    pub tail_mass_y: Option<f64>,
    /// Mean of `|x_t|` over the output sample (FIARCH).
    pub mu_x: Option<f64>,
    pub mu_y: Option<f64>,
    /// Mean composite volatility driving `x_t` over the output sample (FIARCH).
    pub vol_mean_x: Option<f64>,
    pub vol_mean_y: Option<f64>,
}

impl SeriesPair {
    /// Wraps plain series (e.g. read from disk).
    pub fn from_series(x: Vec<f64>, y: Option<Vec<f64>>) -> Self {
        Self {
            x,
            y,
            params: None,
            stats: GenStats::default(),
            surrogate: false,
        }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn process(&self) -> Option<Process> {
        self.params.as_ref().map(|p| p.process)
    }
}

/// Last `L` values of a series, kept contiguous oldest-first.
///
/// Values are written twice, at `i` and `i + L`, so the window is always the
/// slice `buf[head..head + L]`.
#[derive(Debug, Clone)]
struct History {
    buf: Vec<f64>,
    len: usize,
    head: usize,
}

impl History {
    fn new(len: usize, fill: f64) -> Self {
        Self {
            buf: vec![fill; 2 * len],
            len,
            head: 0,
        }
    }

    #[inline]
    fn window(&self) -> &[f64] {
        &self.buf[self.head..self.head + self.len]
    }

    #[inline]
    fn push(&mut self, v: f64) {
        self.buf[self.head] = v;
        self.buf[self.head + self.len] = v;
        self.head += 1;
        if self.head == self.len {
            self.head = 0;
        }
    }
}

/// Dot product with eight independent accumulators.
///
/// The summation order is fixed by this code, so results do not depend on
/// the vector width the compiler picks.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0_f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

const MU0: f64 = 0.797_884_560_802_865_4; // √(2/π)

/// Source of `μ` during generation.
#[derive(Debug, Clone)]
struct AbsMean {
    running: bool,
    sum: f64,
    count: f64,
}

impl AbsMean {
    fn new(mode: MuMode) -> Self {
        debug_assert!((MU0 - FRAC_2_PI.sqrt()).abs() < 1e-15);
        Self {
            running: mode == MuMode::Running,
            sum: MU0,
            count: 1.0,
        }
    }

    #[inline]
    fn mean(&self) -> f64 {
        if self.running {
            self.sum / self.count
        } else {
            MU0
        }
    }

    #[inline]
    fn push(&mut self, abs: f64) {
        self.sum += abs;
        self.count += 1.0;
    }
}

/// Tracks the cumulative mean of a volatility and fails if it leaves
/// `[0.5, 2]`.
#[derive(Debug, Clone, Default)]
struct StabilityMonitor {
    total: f64,
    steps: usize,
}

impl StabilityMonitor {
    #[inline]
    fn push(&mut self, vol: f64) -> Result<()> {
        self.total += vol;
        self.steps += 1;
        if self.steps >= STABILITY_WARMUP && self.steps % STABILITY_CHECK_EVERY == 0 {
            let mean = self.total / self.steps as f64;
            if !(0.5..=2.0).contains(&mean) {
                return Err(Error::Stability {
                    mean,
                    step: self.steps,
                });
            }
        }
        Ok(())
    }
}

fn mean_abs(xs: &[f64]) -> f64 {
    xs.iter().map(|v| v.abs()).sum::<f64>() / xs.len() as f64
}

fn ensure_finite(name: &str, xs: &[f64]) -> Result<()> {
    match xs.iter().position(|v| !v.is_finite()) {
        None => Ok(()),
        Some(i) => Err(Error::Degenerate(format!(
            "non-finite value in {name} at sample {}",
            i + 1
        ))),
    }
}

/// Single-component ARFIMA driven by the given innovation stream.
pub fn arfima_with_stream(params: &GenParams, stream: Stream) -> Result<SeriesPair> {
    params.validate()?;
    let kernel = FracKernel::new(params.d1, params.kernel_len)?;
    let rev = FracKernel::reversed(kernel.weights());
    let mut noise = NoiseStream::new(params.seed, stream);
    let mut hist = History::new(params.kernel_len, 0.0);
    let total = params.burn_in + params.n;
    let mut x = Vec::with_capacity(params.n);

    for t in 0..total {
        let v = dot(hist.window(), &rev) + noise.gaussian();
        hist.push(v);
        if t >= params.burn_in {
            x.push(v);
        }
    }
    ensure_finite("x", &x)?;

    Ok(SeriesPair {
        x,
        y: None,
        params: Some(params.clone()),
        stats: GenStats {
            tail_mass_x: Some(kernel.tail_mass()),
            ..GenStats::default()
        },
        surrogate: false,
    })
}

/// `x_t = Σ a_n(d) x_{t−n} + ε_t` with the x innovation stream.
pub fn gen_arfima(d: f64, n: usize, kernel_len: usize, burn_in: usize, seed: u64) -> Result<SeriesPair> {
    let params = GenParams::arfima(d)
        .with_len(n)
        .with_kernel_len(kernel_len)
        .with_burn_in(burn_in)
        .with_seed(seed);
    arfima_with_stream(&params, Stream::X)
}

/// Two-component ARFIMA with explicit innovation streams for x and y.
pub fn arfima2_with_streams(params: &GenParams, sx: Stream, sy: Stream) -> Result<SeriesPair> {
    params.validate()?;
    let k1 = FracKernel::new(params.d1, params.kernel_len)?;
    let k2 = FracKernel::new(params.d2, params.kernel_len)?;
    let rev1 = FracKernel::reversed(k1.weights());
    let rev2 = FracKernel::reversed(k2.weights());
    let mut ex = NoiseStream::new(params.seed, sx);
    let mut ey = NoiseStream::new(params.seed, sy);
    let mut hx = History::new(params.kernel_len, 0.0);
    let mut hy = History::new(params.kernel_len, 0.0);
    let (w, cw) = (params.w, 1.0 - params.w);
    let total = params.burn_in + params.n;
    let mut x = Vec::with_capacity(params.n);
    let mut y = Vec::with_capacity(params.n);

    for t in 0..total {
        let mx = dot(hx.window(), &rev1);
        let my = dot(hy.window(), &rev2);
        let xv = (w * mx + cw * my) + ex.gaussian();
        let yv = (cw * mx + w * my) + ey.gaussian();
        hx.push(xv);
        hy.push(yv);
        if t >= params.burn_in {
            x.push(xv);
            y.push(yv);
        }
    }
    ensure_finite("x", &x)?;
    ensure_finite("y", &y)?;

    Ok(SeriesPair {
        x,
        y: Some(y),
        params: Some(params.clone()),
        stats: GenStats {
            tail_mass_x: Some(k1.tail_mass()),
            tail_mass_y: Some(k2.tail_mass()),
            ..GenStats::default()
        },
        surrogate: false,
    })
}

/// Coupled ARFIMA:
/// `x_t = W X_t + (1−W) Y_t + ε_t`, `y_t = (1−W) X_t + W Y_t + ε̃_t`.
pub fn gen_arfima2(params: &GenParams) -> Result<SeriesPair> {
    arfima2_with_streams(params, Stream::X, Stream::Y)
}

/// Single-component FIARCH driven by the given innovation stream.
pub fn fiarch_with_stream(params: &GenParams, stream: Stream) -> Result<SeriesPair> {
    params.validate()?;
    let kernel = FracKernel::new(params.d1, params.kernel_len)?;
    let rev = FracKernel::reversed(kernel.weights());
    let tail = kernel.tail_mass();
    let mut noise = NoiseStream::new(params.seed, stream);
    let mut hist = History::new(params.kernel_len, MU0);
    let mut mu = AbsMean::new(params.mu_mode);
    let mut monitor = StabilityMonitor::default();
    let total = params.burn_in + params.n;
    let mut x = Vec::with_capacity(params.n);
    let mut vol_sum = 0.0;

    for t in 0..total {
        let sigma = tail + dot(hist.window(), &rev) / mu.mean();
        let v = sigma * noise.gaussian();
        let a = v.abs();
        hist.push(a);
        mu.push(a);
        monitor.push(sigma)?;
        if t >= params.burn_in {
            x.push(v);
            vol_sum += sigma;
        }
    }
    ensure_finite("x", &x)?;

    Ok(SeriesPair {
        stats: GenStats {
            tail_mass_x: Some(kernel.tail_mass()),
            mu_x: Some(mean_abs(&x)),
            vol_mean_x: Some(vol_sum / params.n as f64),
            ..GenStats::default()
        },
        x,
        y: None,
        params: Some(params.clone()),
        surrogate: false,
    })
}

/// `x_t = σ_t ε_t`, `σ_t = Σ a_n(d) |x_{t−n}| / μ_x`.
pub fn gen_fiarch(d: f64, n: usize, kernel_len: usize, burn_in: usize, seed: u64) -> Result<SeriesPair> {
    let params = GenParams::fiarch(d)
        .with_len(n)
        .with_kernel_len(kernel_len)
        .with_burn_in(burn_in)
        .with_seed(seed);
    fiarch_with_stream(&params, Stream::X)
}

/// Two-component FIARCH with explicit innovation streams for x and y.
pub fn fiarch2_with_streams(params: &GenParams, sx: Stream, sy: Stream) -> Result<SeriesPair> {
    params.validate()?;
    let k1 = FracKernel::new(params.d1, params.kernel_len)?;
    let k2 = FracKernel::new(params.d2, params.kernel_len)?;
    let rev1 = FracKernel::reversed(k1.weights());
    let rev2 = FracKernel::reversed(k2.weights());
    let (tail1, tail2) = (k1.tail_mass(), k2.tail_mass());
    let mut ex = NoiseStream::new(params.seed, sx);
    let mut ey = NoiseStream::new(params.seed, sy);
    let mut hx = History::new(params.kernel_len, MU0);
    let mut hy = History::new(params.kernel_len, MU0);
    let mut mux = AbsMean::new(params.mu_mode);
    let mut muy = AbsMean::new(params.mu_mode);
    let mut mon_x = StabilityMonitor::default();
    let mut mon_y = StabilityMonitor::default();
    let (w, cw) = (params.w, 1.0 - params.w);
    let total = params.burn_in + params.n;
    let mut x = Vec::with_capacity(params.n);
    let mut y = Vec::with_capacity(params.n);
    let (mut vol_x, mut vol_y) = (0.0, 0.0);

    for t in 0..total {
        let sx_t = tail1 + dot(hx.window(), &rev1) / mux.mean();
        let sy_t = tail2 + dot(hy.window(), &rev2) / muy.mean();
        let cx = w * sx_t + cw * sy_t;
        let cy = cw * sx_t + w * sy_t;
        let xv = cx * ex.gaussian();
        let yv = cy * ey.gaussian();
        let (ax, ay) = (xv.abs(), yv.abs());
        hx.push(ax);
        hy.push(ay);
        mux.push(ax);
        muy.push(ay);
        mon_x.push(cx)?;
        mon_y.push(cy)?;
        if t >= params.burn_in {
            x.push(xv);
            y.push(yv);
            vol_x += cx;
            vol_y += cy;
        }
    }
    ensure_finite("x", &x)?;
    ensure_finite("y", &y)?;

    let n = params.n as f64;
    Ok(SeriesPair {
        stats: GenStats {
            tail_mass_x: Some(k1.tail_mass()),
            tail_mass_y: Some(k2.tail_mass()),
            mu_x: Some(mean_abs(&x)),
            mu_y: Some(mean_abs(&y)),
            vol_mean_x: Some(vol_x / n),
            vol_mean_y: Some(vol_y / n),
        },
        x,
        y: Some(y),
        params: Some(params.clone()),
        surrogate: false,
    })
}

/// Coupled FIARCH:
/// `x_t = [W σ_x + (1−W) σ_y] ε_t`, `y_t = [(1−W) σ_x + W σ_y] ε̃_t`.
pub fn gen_fiarch2(params: &GenParams) -> Result<SeriesPair> {
    fiarch2_with_streams(params, Stream::X, Stream::Y)
}

/// Dispatches on `params.process`.
pub fn generate(params: &GenParams) -> Result<SeriesPair> {
    match params.process {
        Process::Arfima => arfima_with_stream(params, Stream::X),
        Process::Arfima2 => gen_arfima2(params),
        Process::Fiarch => fiarch_with_stream(params, Stream::X),
        Process::Fiarch2 => gen_fiarch2(params),
    }
}
