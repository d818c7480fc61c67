use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use fraccouple::correlation::{autocorr_of, crosscorr_of, null_band, Lags, Transform};
use fraccouple::dfa::{dfa_with, DfaConfig};
use fraccouple::experiments::{run_experiment, ConfigFile, ExperimentConfig, Figure};
use fraccouple::generators::{default_burn_in, DEFAULT_N};
use fraccouple::io::{read_columns, read_pair, write_corr_csv, write_dfa, write_kernel_csv, write_pair};
use fraccouple::kernel::DEFAULT_KERNEL_LEN;
use fraccouple::{build_kernel, generate, surrogate_pair, GenParams, MuMode, Process, SurrogateMode, SurrogateSpec};

/// Coupled long-range correlated time series: generation and analysis.
#[derive(Parser)]
#[command(name = "fraccouple", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dump the fractional weights a_n(d) as `n,a_n`.
    Kernel {
        #[arg(long, allow_hyphen_values = true)]
        d: f64,
        #[arg(long, default_value_t = DEFAULT_KERNEL_LEN)]
        len: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a series (or pair) and its metadata sidecar.
    Generate(GenerateArgs),
    /// Correlation functions and DFA of series files.
    #[command(subcommand)]
    Analyze(Analyze),
    /// Fourier phase-randomized surrogate of a series file.
    Surrogate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "independent")]
        mode: SurrogateMode,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an ensemble experiment (a figure preset or a config file).
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    process: Process,
    /// Scaling parameter of x (alias: --d).
    #[arg(long, alias = "d", allow_hyphen_values = true)]
    d1: f64,
    /// Scaling parameter of y (coupled processes).
    #[arg(long, default_value_t = 0.0)]
    d2: f64,
    /// Coupling W (coupled processes).
    #[arg(long, default_value_t = 1.0)]
    w: f64,
    #[arg(long, default_value_t = DEFAULT_N)]
    n: usize,
    /// Kernel truncation length L.
    #[arg(long, default_value_t = DEFAULT_KERNEL_LEN)]
    len: usize,
    /// Discarded samples; defaults to min(10 L, 10^5), at least L.
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Normalization of FIARCH volatilities: running or stationary.
    #[arg(long, default_value = "running")]
    mu: MuMode,
    /// Accept W in [0, 1] instead of [0.5, 1].
    #[arg(long)]
    allow_full_w: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Analyze {
    /// Auto-correlation (one column) or cross-correlation C(n) = corr(a_t, b_{t-n}).
    Corr {
        #[arg(long = "in")]
        input: PathBuf,
        /// `x`, `y` or `x,y`.
        #[arg(long, default_value = "x")]
        cols: String,
        /// Correlate absolute values.
        #[arg(long)]
        abs: bool,
        /// `log:A:B[:K]`, `lin:A:B` or a comma list; default log:1:N/100.
        #[arg(long)]
        lags: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Detrended fluctuation analysis; writes `n,F` and a summary JSON sidecar.
    Dfa {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "x")]
        col: String,
        #[arg(long)]
        abs: bool,
        #[arg(long, default_value_t = 1)]
        order: usize,
        /// Window sizes in the lag-grid syntax; default log grid up to N/4.
        #[arg(long)]
        windows: Option<String>,
        #[arg(long, requires = "fit_max")]
        fit_min: Option<usize>,
        #[arg(long, requires = "fit_min")]
        fit_max: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    preset: Option<Figure>,
    /// Key-value config file; its keys override the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    ensemble: Option<usize>,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    len: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
    /// Keep per-run series and analysis files under `runs/`.
    #[arg(long)]
    keep_runs: bool,
    #[arg(long)]
    out: PathBuf,
}

fn transform(abs: bool) -> Transform {
    if abs {
        Transform::Absolute
    } else {
        Transform::Raw
    }
}

fn cmd_generate(a: GenerateArgs) -> Result<()> {
    let mut params = GenParams::new(a.process, a.d1, a.d2, a.w)
        .with_len(a.n)
        .with_kernel_len(a.len)
        .with_seed(a.seed)
        .with_mu_mode(a.mu)
        .with_full_w(a.allow_full_w);
    params = params.with_burn_in(a.burn_in.unwrap_or_else(|| default_burn_in(a.len)));
    let pair = generate(&params)?;
    write_pair(&a.out, &pair, None)?;
    log::info!("wrote {} samples to {}", pair.len(), a.out.display());
    Ok(())
}

fn cmd_corr(input: PathBuf, cols: String, abs: bool, lags: Option<String>, out: PathBuf) -> Result<()> {
    let names: Vec<&str> = cols.split(',').map(str::trim).collect();
    if names.is_empty() || names.len() > 2 {
        bail!("--cols takes one or two column names, got `{cols}`");
    }
    let data = read_columns(&input, &names)?;
    let n = data[0].len();
    let lags = match lags {
        Some(spec) => Lags::parse(&spec)?,
        None => Lags::default_for(n)?,
    };
    let corr = match data.as_slice() {
        [x] => autocorr_of(x, &lags, transform(abs))?,
        [x, y] => crosscorr_of(x, y, &lags, transform(abs))?,
        _ => unreachable!(),
    };
    write_corr_csv(&out, &corr)?;
    log::info!(
        "{} lags, {:.1}% inside the null band ±{:.4}",
        corr.lags.len(),
        100.0 * corr.fraction_within(null_band(n)),
        null_band(n)
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_dfa(
    input: PathBuf,
    col: String,
    abs: bool,
    order: usize,
    windows: Option<String>,
    fit: Option<(usize, usize)>,
    out: PathBuf,
) -> Result<()> {
    let data = read_columns(&input, &[col.as_str()])?;
    let series = transform(abs).apply(&data[0]).into_owned();
    let config = DfaConfig {
        order,
        windows: windows.map(|w| Lags::parse(&w).map(|l| l.as_slice().to_vec())).transpose()?,
        fit_range: fit,
    };
    let result = dfa_with(&series, &config)?;
    write_dfa(&out, &result)?;
    println!(
        "alpha = {:.4} ± {:.4} over [{}, {}]",
        result.alpha, result.fit_stderr, result.fit_range.0, result.fit_range.1
    );
    Ok(())
}

fn cmd_surrogate(input: PathBuf, mode: SurrogateMode, seed: u64, out: PathBuf) -> Result<()> {
    let pair = read_pair(&input)?;
    let spec = SurrogateSpec::new(mode, seed);
    let surr = surrogate_pair(&pair, &spec)?;
    write_pair(&out, &surr, Some(spec))?;
    Ok(())
}

fn experiment_config(a: &ExperimentArgs) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::preset(a.preset.unwrap_or(Figure::Custom));
    if let Some(path) = &a.config {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let file = ConfigFile::parse(&text).with_context(|| path.display().to_string())?;
        if let (Some(cli), Some(f)) = (a.preset, file.preset) {
            if cli != f {
                bail!("--preset {cli} conflicts with preset = \"{f}\" in {}", path.display());
            }
        }
        cfg = cfg.apply(&file);
    }
    if let Some(v) = a.ensemble {
        cfg.ensemble = v;
    }
    if let Some(v) = a.jobs {
        cfg.jobs = v;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    if let Some(v) = a.n {
        cfg.n = v;
    }
    if let Some(v) = a.len {
        cfg.kernel_len = v;
        if a.burn_in.is_none() {
            cfg.burn_in = cfg.burn_in.max(v);
        }
    }
    if let Some(v) = a.burn_in {
        cfg.burn_in = v;
    }
    cfg.keep_runs |= a.keep_runs;
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_experiment(a: ExperimentArgs) -> Result<bool> {
    let cfg = experiment_config(&a)?;
    let report = run_experiment(&cfg, &a.out)?;
    for f in &report.failures {
        eprintln!("grid point {} member {} failed: {}", f.grid_index, f.member, f.message);
    }
    println!(
        "{} grid points x {} members, {} summary rows, {} failures -> {}",
        cfg.grid().len(),
        cfg.ensemble,
        report.rows.len(),
        report.failures.len(),
        a.out.display()
    );
    Ok(report.succeeded())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Kernel { d, len, out } => {
            write_kernel_csv(&out, &build_kernel(d, len)?)?;
        }
        Command::Generate(a) => cmd_generate(a)?,
        Command::Analyze(Analyze::Corr {
            input,
            cols,
            abs,
            lags,
            out,
        }) => cmd_corr(input, cols, abs, lags, out)?,
        Command::Analyze(Analyze::Dfa {
            input,
            col,
            abs,
            order,
            windows,
            fit_min,
            fit_max,
            out,
        }) => cmd_dfa(input, col, abs, order, windows, fit_min.zip(fit_max), out)?,
        Command::Surrogate {
            input,
            mode,
            seed,
            out,
        } => cmd_surrogate(input, mode, seed, out)?,
        Command::Experiment(a) => return cmd_experiment(a),
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
