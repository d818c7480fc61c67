//! Coupled long-range correlated time series.
//!
//! Generators for single and two-component ARFIMA and FIARCH processes built
//! on truncated fractional kernels, together with the estimators used to
//! check their scaling: sample auto- and cross-correlation, detrended
//! fluctuation analysis and Fourier phase-randomization surrogates. The
//! [`experiments`] module runs seeded parameter sweeps over all of these.

pub mod correlation;
pub mod dfa;
pub mod error;
pub mod experiments;
pub mod generators;
pub mod io;
pub mod kernel;
pub mod rng;
pub mod stats;
pub mod surrogate;

pub use correlation::{autocorr, crosscorr, fiarch_acf_oracle, null_band, CorrFunction, CorrKind, Lags, Transform};
pub use dfa::{dfa, dfa_crossover_scan, dfa_with, DfaConfig, DfaResult};
pub use error::{Error, Result};
pub use experiments::{load_config, run_experiment, ExperimentConfig, Figure, Report, SummaryRow};
pub use generators::{
    gen_arfima, gen_arfima2, gen_fiarch, gen_fiarch2, generate, GenParams, GenStats, MuMode, Process,
    SeriesPair,
};
pub use kernel::{build_kernel, weight_at, FracKernel};
pub use surrogate::{phase_randomize, surrogate_pair, SurrogateMode, SurrogateSpec};
