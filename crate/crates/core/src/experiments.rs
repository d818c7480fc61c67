//! Ensemble experiments over parameter grids.
//!
//! A config file is TOML restricted to top-level `key = value` pairs:
//!
//! ```toml
//! preset = "fig4"             # fig1..fig5 or custom; fills every other key
//! process = "arfima2"         # arfima, arfima2, fiarch, fiarch2
//! d = [[0.4, 0.1]]            # (d1, d2) pairs; d2 is ignored by single processes
//! w = [1.0, 0.9, 0.7, 0.5]
//! ensemble = 10
//! n = 131072
//! kernel_len = 10000
//! burn_in = 50000
//! seed = 0                    # master seed, < 2^63
//! analysis = ["dfa"]          # any of corr, dfa, surrogate
//! lags = "log:1:1000:20"
//! dfa_order = 1
//! mu = "running"              # or stationary (FIARCH only)
//! allow_full_w = false
//! jobs = 1
//! keep_runs = false
//! ```
//!
//! Keys missing from the file take the preset's value. The grid is the product
//! of `d` (outer) and `w` (inner); grid point `g`, ensemble member `m` is
//! generated with seed `derive_seed(seed, g, m)` (three SplitMix64 finalizer
//! rounds, see [`crate::rng::derive_seed`]). Surrogates reuse the run seed on
//! the dedicated phase streams.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::correlation::{autocorr_of, crosscorr_of, null_band, CorrFunction, Lags, Transform};
use crate::dfa::{dfa_with, DfaConfig, MAX_ORDER};
use crate::error::{Error, Result};
use crate::generators::{default_burn_in, generate, GenParams, MuMode, Process, SeriesPair, DEFAULT_N};
use crate::io::{fmt_real, write_corr_csv, write_dfa, write_pair};
use crate::kernel::DEFAULT_KERNEL_LEN;
use crate::rng::derive_seed;
use crate::stats::mean_stderr;
use crate::surrogate::{surrogate_pair, SurrogateMode, SurrogateSpec};

pub const DEFAULT_ENSEMBLE: usize = 10;
pub const DEFAULT_LAGS: &str = "log:1:1000:20";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Figure {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Custom,
}

impl Figure {
    pub const ALL: [Figure; 6] = [
        Figure::Fig1,
        Figure::Fig2,
        Figure::Fig3,
        Figure::Fig4,
        Figure::Fig5,
        Figure::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig1 => "fig1",
            Figure::Fig2 => "fig2",
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
            Figure::Fig5 => "fig5",
            Figure::Custom => "custom",
        }
    }
}

impl FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Figure::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::ConfigField {
                field: "preset".into(),
                reason: format!("unknown preset `{s}` (expected fig1..fig5 or custom)"),
            })
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Analysis {
    /// Auto- and cross-correlation functions.
    Corr,
    /// DFA exponents of both components.
    Dfa,
    /// Correlation functions of an independent phase-randomized surrogate.
    Surrogate,
}

/// Config file contents. Every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub preset: Option<Figure>,
    pub process: Option<Process>,
    pub d: Option<Vec<[f64; 2]>>,
    pub w: Option<Vec<f64>>,
    pub ensemble: Option<usize>,
    pub n: Option<usize>,
    pub kernel_len: Option<usize>,
    pub burn_in: Option<usize>,
    pub seed: Option<u64>,
    pub analysis: Option<Vec<Analysis>>,
    pub lags: Option<String>,
    pub dfa_order: Option<usize>,
    pub mu: Option<MuMode>,
    pub allow_full_w: Option<bool>,
    pub jobs: Option<usize>,
    pub keep_runs: Option<bool>,
}

impl ConfigFile {
    /// Parses config text; syntax errors and unknown keys report line and column.
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| toml_error(text, &e))
    }
}

/// A fully resolved experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub figure: Figure,
    pub process: Process,
    pub d: Vec<(f64, f64)>,
    pub w: Vec<f64>,
    pub ensemble: usize,
    pub n: usize,
    pub kernel_len: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub analysis: Vec<Analysis>,
    pub lags: String,
    pub dfa_order: usize,
    pub mu: MuMode,
    pub allow_full_w: bool,
    pub jobs: usize,
    pub keep_runs: bool,
}

impl ExperimentConfig {
    pub fn preset(figure: Figure) -> Self {
        let base = Self {
            figure,
            process: Process::Arfima2,
            d: vec![(0.4, 0.4)],
            w: vec![0.8],
            ensemble: DEFAULT_ENSEMBLE,
            n: DEFAULT_N,
            kernel_len: DEFAULT_KERNEL_LEN,
            burn_in: default_burn_in(DEFAULT_KERNEL_LEN),
            seed: 0,
            analysis: vec![Analysis::Corr],
            lags: DEFAULT_LAGS.into(),
            dfa_order: 1,
            mu: MuMode::Running,
            allow_full_w: false,
            jobs: 1,
            keep_runs: false,
        };
        match figure {
            Figure::Fig1 => Self {
                d: vec![(0.4, 0.4), (0.3, 0.3)],
                ..base
            },
            Figure::Fig2 => Self {
                analysis: vec![Analysis::Corr, Analysis::Surrogate],
                ..base
            },
            Figure::Fig3 => Self {
                w: vec![0.5, 0.6, 0.7, 0.8, 0.9, 1.0],
                ..base
            },
            Figure::Fig4 => Self {
                d: vec![(0.4, 0.1)],
                w: vec![1.0, 0.9, 0.7, 0.5],
                analysis: vec![Analysis::Dfa],
                ..base
            },
            Figure::Fig5 => Self {
                process: Process::Fiarch2,
                d: vec![(0.4, 0.1)],
                w: vec![1.0, 0.9, 0.7, 0.5],
                analysis: vec![Analysis::Dfa],
                ..base
            },
            Figure::Custom => base,
        }
    }

    /// Overlays every key present in `file`. A `preset` key restarts from
    /// that preset before the other keys are applied.
    pub fn apply(mut self, file: &ConfigFile) -> Self {
        if let Some(p) = file.preset {
            self = Self::preset(p);
        }
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = &file.$field {
                    self.$field = v.clone();
                }
            )*};
        }
        set!(process, w, ensemble, n, kernel_len, burn_in, seed, analysis, lags, dfa_order, mu, allow_full_w, jobs, keep_runs);
        if let Some(d) = &file.d {
            self.d = d.iter().map(|p| (p[0], p[1])).collect();
        }
        self
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file = ConfigFile::parse(text)?;
        let cfg = Self::preset(Figure::Custom).apply(&file);
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks every field and every grid point against generator preconditions.
    pub fn validate(&self) -> Result<()> {
        let field = |field: &str, reason: String| Error::ConfigField {
            field: field.into(),
            reason,
        };
        if self.ensemble == 0 {
            return Err(field("ensemble", "must be at least 1".into()));
        }
        if self.jobs == 0 {
            return Err(field("jobs", "must be at least 1".into()));
        }
        if self.d.is_empty() {
            return Err(field("d", "needs at least one (d1, d2) pair".into()));
        }
        if self.w.is_empty() {
            return Err(field("w", "needs at least one value".into()));
        }
        if self.analysis.is_empty() {
            return Err(field("analysis", "needs at least one of corr, dfa, surrogate".into()));
        }
        if self.seed > i64::MAX as u64 {
            return Err(field("seed", format!("{} exceeds 2^63 - 1", self.seed)));
        }
        if !(1..=MAX_ORDER).contains(&self.dfa_order) {
            return Err(field("dfa_order", format!("{} not in 1..={MAX_ORDER}", self.dfa_order)));
        }
        let lags = Lags::parse(&self.lags).map_err(|e| field("lags", e.to_string()))?;
        if self.wants_corr() && lags.max() + 2 >= self.n {
            return Err(field("lags", format!("largest lag {} needs n > {}", lags.max(), lags.max() + 2)));
        }
        let (lo, hi) = if self.allow_full_w { (0.0, 1.0) } else { (0.5, 1.0) };
        for &w in &self.w {
            if !(lo..=hi).contains(&w) {
                return Err(field("w", format!("W = {w} outside legal range [{lo}, {hi}]")));
            }
        }
        for g in self.grid() {
            g.params.validate().map_err(|e| match e {
                Error::Parameter { name, reason } => field(config_key(name), reason),
                other => other,
            })?;
        }
        Ok(())
    }

    fn wants_corr(&self) -> bool {
        self.analysis.iter().any(|a| matches!(a, Analysis::Corr | Analysis::Surrogate))
    }

    /// Grid points in `d`-major, `w`-minor order.
    pub fn grid(&self) -> Vec<GridPoint> {
        let mut out = Vec::new();
        for &(d1, d2) in &self.d {
            for &w in &self.w {
                let index = out.len();
                let params = GenParams::new(self.process, d1, d2, w)
                    .with_len(self.n)
                    .with_kernel_len(self.kernel_len)
                    .with_burn_in(self.burn_in)
                    .with_seed(self.seed)
                    .with_full_w(self.allow_full_w)
                    .with_mu_mode(self.mu);
                out.push(GridPoint { index, params });
            }
        }
        out
    }

    /// The resolved config as a loadable file with every key spelled out.
    pub fn to_file(&self) -> ConfigFile {
        ConfigFile {
            preset: Some(self.figure),
            process: Some(self.process),
            d: Some(self.d.iter().map(|&(a, b)| [a, b]).collect()),
            w: Some(self.w.clone()),
            ensemble: Some(self.ensemble),
            n: Some(self.n),
            kernel_len: Some(self.kernel_len),
            burn_in: Some(self.burn_in),
            seed: Some(self.seed),
            analysis: Some(self.analysis.clone()),
            lags: Some(self.lags.clone()),
            dfa_order: Some(self.dfa_order),
            mu: Some(self.mu),
            allow_full_w: Some(self.allow_full_w),
            jobs: Some(self.jobs),
            keep_runs: Some(self.keep_runs),
        }
    }

    pub fn effective_text(&self) -> String {
        toml::to_string(&self.to_file()).expect("config serializes")
    }
}

fn config_key(param: &str) -> &str {
    match param {
        "d1" | "d2" => "d",
        "len" => "kernel_len",
        other => other,
    }
}

fn toml_error(text: &str, e: &toml::de::Error) -> Error {
    let offset = e.span().map(|s| s.start).unwrap_or(0).min(text.len());
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map(|i| i + 1).unwrap_or(0) + 1;
    Error::ConfigParse {
        line,
        column,
        message: e.message().to_string(),
    }
}

/// Reads and validates a config file; keys absent from it take the values of
/// its `preset` (or of `custom`).
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ExperimentConfig::from_toml_str(&text)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub index: usize,
    /// Seed field holds the master seed; members use [`GridPoint::member_params`].
    pub params: GenParams,
}

impl GridPoint {
    pub fn member_params(&self, member: usize) -> GenParams {
        let seed = derive_seed(self.params.seed, self.index as u64, member as u64);
        self.params.clone().with_seed(seed)
    }
}

/// One line of `summary.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub grid_index: usize,
    pub process: Process,
    pub d1: f64,
    pub d2: f64,
    pub w: f64,
    pub statistic: String,
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridFailure {
    pub grid_index: usize,
    pub member: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub rows: Vec<SummaryRow>,
    pub failures: Vec<GridFailure>,
}

impl Report {
    pub fn succeeded(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn get(&self, grid_index: usize, statistic: &str) -> Option<&SummaryRow> {
        self.rows
            .iter()
            .find(|r| r.grid_index == grid_index && r.statistic == statistic)
    }
}

type Stats = Vec<(String, f64)>;

fn push_curve(out: &mut Stats, prefix: &str, c: &CorrFunction) {
    for (lag, v) in c.lags.iter().zip(&c.values) {
        out.push((format!("{prefix}_at_lag_{lag}"), *v));
    }
}

fn corr_stats(out: &mut Stats, pair: &SeriesPair, lags: &Lags, tag: &str) -> Result<Vec<CorrFunction>> {
    let transform = match pair.process() {
        Some(p) if p.is_volatility() => Transform::Absolute,
        _ => Transform::Raw,
    };
    let band = null_band(pair.len());
    let mut curves = Vec::new();
    let ax = autocorr_of(&pair.x, lags, transform)?;
    push_curve(out, &format!("A{tag}_x"), &ax);
    curves.push(ax);
    if let Some(y) = &pair.y {
        let ay = autocorr_of(y, lags, transform)?;
        let c = crosscorr_of(&pair.x, y, lags, transform)?;
        push_curve(out, &format!("A{tag}_y"), &ay);
        push_curve(out, &format!("C{tag}"), &c);
        out.push((format!("C{tag}_band_fraction"), c.fraction_within(band)));
        curves.push(ay);
        curves.push(c);
    }
    Ok(curves)
}

fn run_member(cfg: &ExperimentConfig, point: &GridPoint, member: usize, runs_dir: Option<&Path>) -> Result<Stats> {
    let params = point.member_params(member);
    let pair = generate(&params)?;
    let lags = Lags::parse(&cfg.lags)?;
    let stem = format!("g{}_m{}", point.index, member);
    let run_file = |suffix: &str| runs_dir.map(|d| d.join(format!("{stem}_{suffix}.csv")));
    let mut out = Stats::new();

    if let Some(p) = run_file("series") {
        write_pair(&p, &pair, None)?;
    }
    if let Some(v) = pair.stats.vol_mean_x {
        out.push(("vol_mean_x".into(), v));
    }
    if let Some(v) = pair.stats.vol_mean_y {
        out.push(("vol_mean_y".into(), v));
    }
    for a in &cfg.analysis {
        match a {
            Analysis::Corr => {
                let curves = corr_stats(&mut out, &pair, &lags, "")?;
                for (c, name) in curves.iter().zip(["Ax", "Ay", "C"]) {
                    if let Some(p) = run_file(name) {
                        write_corr_csv(&p, c)?;
                    }
                }
            }
            Analysis::Surrogate => {
                let spec = SurrogateSpec::new(SurrogateMode::Independent, params.seed);
                let surr = surrogate_pair(&pair, &spec)?;
                if let Some(p) = run_file("surrogate") {
                    write_pair(&p, &surr, Some(spec))?;
                }
                let curves = corr_stats(&mut out, &surr, &lags, "s")?;
                for (c, name) in curves.iter().zip(["Asx", "Asy", "Cs"]) {
                    if let Some(p) = run_file(name) {
                        write_corr_csv(&p, c)?;
                    }
                }
            }
            Analysis::Dfa => {
                let transform = if params.process.is_volatility() {
                    Transform::Absolute
                } else {
                    Transform::Raw
                };
                let dcfg = DfaConfig::with_order(cfg.dfa_order);
                let comps: Vec<(&str, &[f64])> = match &pair.y {
                    Some(y) => vec![("x", &pair.x), ("y", y)],
                    None => vec![("x", &pair.x)],
                };
                for (name, series) in comps {
                    let r = dfa_with(&transform.apply(series), &dcfg)?;
                    out.push((format!("alpha_{name}"), r.alpha));
                    for (n, f) in r.window_sizes.iter().zip(&r.fluctuations) {
                        out.push((format!("F_{name}_at_n_{n}"), *f));
                    }
                    if let Some(p) = run_file(&format!("dfa_{name}")) {
                        write_dfa(&p, &r)?;
                    }
                }
            }
        }
    }
    Ok(out)
}

fn aggregate(point: &GridPoint, members: &[Stats]) -> Vec<SummaryRow> {
    let p = &point.params;
    let names: Vec<&String> = members[0].iter().map(|(n, _)| n).collect();
    names
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let values: Vec<f64> = members.iter().map(|m| m[i].1).collect();
            let s = mean_stderr(&values);
            SummaryRow {
                grid_index: point.index,
                process: p.process,
                d1: p.d1,
                d2: if p.process.is_coupled() { p.d2 } else { f64::NAN },
                w: if p.process.is_coupled() { p.w } else { f64::NAN },
                statistic: (*name).clone(),
                mean: s.mean,
                stderr: s.stderr,
                count: s.count,
            }
        })
        .collect()
}

/// Runs every grid point and ensemble member without touching the disk.
pub fn run_in_memory(cfg: &ExperimentConfig) -> Result<Report> {
    run(cfg, None)
}

fn run(cfg: &ExperimentConfig, runs_dir: Option<&Path>) -> Result<Report> {
    cfg.validate()?;
    let grid = cfg.grid();
    let tasks: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|g| (0..cfg.ensemble).map(move |m| (g, m)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::ConfigField {
            field: "jobs".into(),
            reason: e.to_string(),
        })?;
    let results: Vec<Result<Stats>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(g, m)| run_member(cfg, &grid[g], m, runs_dir))
            .collect()
    });

    let mut report = Report::default();
    for (point, chunk) in grid.iter().zip(results.chunks(cfg.ensemble)) {
        let mut members = Vec::with_capacity(chunk.len());
        let mut failed = false;
        for (m, r) in chunk.iter().enumerate() {
            match r {
                Ok(stats) => members.push(stats.clone()),
                Err(e) => {
                    log::error!("grid point {} member {m}: {e}", point.index);
                    report.failures.push(GridFailure {
                        grid_index: point.index,
                        member: m,
                        message: e.to_string(),
                    });
                    failed = true;
                }
            }
        }
        if !failed {
            report.rows.extend(aggregate(point, &members));
        }
    }
    Ok(report)
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut s = String::from("grid_index,process,d1,d2,w,statistic,mean,stderr,count\n");
    for r in rows {
        let opt = |v: f64| if v.is_nan() { String::new() } else { fmt_real(v) };
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            r.grid_index,
            r.process,
            fmt_real(r.d1),
            opt(r.d2),
            opt(r.w),
            r.statistic,
            fmt_real(r.mean),
            fmt_real(r.stderr),
            r.count
        )
        .unwrap();
    }
    s
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Runs the experiment and writes `summary.csv`, `effective-config.txt`,
/// `errors.log` and, with `keep_runs`, per-run files under `runs/`.
///
/// Failures of individual grid points are reported, not returned as errors;
/// only an invalid config or an unwritable output directory is fatal.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Report> {
    cfg.validate()?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    write_text(&out_dir.join("effective-config.txt"), &cfg.effective_text())?;
    let runs_dir: Option<PathBuf> = if cfg.keep_runs {
        let d = out_dir.join("runs");
        fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
        Some(d)
    } else {
        None
    };
    let report = run(cfg, runs_dir.as_deref())?;
    write_text(&out_dir.join("summary.csv"), &summary_csv(&report.rows))?;
    let mut log = String::new();
    for f in &report.failures {
        writeln!(log, "grid_index={} member={}: {}", f.grid_index, f.member, f.message).unwrap();
    }
    write_text(&out_dir.join("errors.log"), &log)?;
    Ok(report)
}
