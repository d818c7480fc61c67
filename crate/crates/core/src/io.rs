//! CSV and JSON file formats.
//!
//! Reals are written with 17 significant digits (`{:.16e}`), which round-trips
//! every `f64` exactly.

use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::correlation::CorrFunction;
use crate::dfa::DfaResult;
use crate::error::{Error, Result};
use crate::generators::{GenParams, GenStats, SeriesPair};
use crate::kernel::FracKernel;

pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::WriterBuilder::new().from_writer(create(path)?))
}

/// `n,a_n` rows for `n = 1..=L`.
pub fn write_kernel_csv(path: &Path, kernel: &FracKernel) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["n", "a_n"])?;
    for (i, a) in kernel.weights().iter().enumerate() {
        w.write_record([(i + 1).to_string(), fmt_real(*a)])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Everything in a [`SeriesPair`] except the samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesMeta {
    pub params: Option<GenParams>,
    pub stats: GenStats,
    pub surrogate: bool,
    pub n: usize,
    /// Surrogate seed and mode, when the series is a surrogate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surrogate_spec: Option<crate::surrogate::SurrogateSpec>,
}

/// `pair.csv` → `pair.meta.json`
pub fn meta_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("meta.json")
}

/// Writes `t,x[,y]` rows with `t` starting at 1.
pub fn write_series_csv(path: &Path, pair: &SeriesPair) -> Result<()> {
    let mut w = csv_writer(path)?;
    match &pair.y {
        Some(y) => {
            w.write_record(["t", "x", "y"])?;
            for (t, (a, b)) in pair.x.iter().zip(y).enumerate() {
                w.write_record([(t + 1).to_string(), fmt_real(*a), fmt_real(*b)])?;
            }
        }
        None => {
            w.write_record(["t", "x"])?;
            for (t, a) in pair.x.iter().enumerate() {
                w.write_record([(t + 1).to_string(), fmt_real(*a)])?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_meta(path: &Path, meta: &SeriesMeta) -> Result<()> {
    let mut f = create(path)?;
    serde_json::to_writer_pretty(&mut f, meta)?;
    writeln!(f).map_err(|e| Error::io(path, e))?;
    f.flush().map_err(|e| Error::io(path, e))
}

/// Series CSV plus its metadata sidecar.
pub fn write_pair(path: &Path, pair: &SeriesPair, surrogate_spec: Option<crate::surrogate::SurrogateSpec>) -> Result<()> {
    write_series_csv(path, pair)?;
    write_meta(
        &meta_path(path),
        &SeriesMeta {
            params: pair.params.clone(),
            stats: pair.stats.clone(),
            surrogate: pair.surrogate,
            n: pair.len(),
            surrogate_spec,
        },
    )
}

/// Reads the named columns of a CSV file with a header row.
pub fn read_columns(path: &Path, names: &[&str]) -> Result<Vec<Vec<f64>>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = r.headers()?.clone();
    let idx: Vec<usize> = names
        .iter()
        .map(|name| {
            headers.iter().position(|h| h == *name).ok_or_else(|| {
                Error::Format(format!("{}: no column `{name}`", path.display()))
            })
        })
        .collect::<Result<_>>()?;
    let mut cols = vec![Vec::new(); names.len()];
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        for (c, &i) in idx.iter().enumerate() {
            let field = rec.get(i).unwrap_or("");
            let v: f64 = field.parse().map_err(|_| {
                Error::Format(format!(
                    "{}: row {}: `{field}` is not a number",
                    path.display(),
                    row + 2
                ))
            })?;
            cols[c].push(v);
        }
    }
    Ok(cols)
}

/// Reads a generated series file (and its sidecar, if present).
pub fn read_pair(path: &Path) -> Result<SeriesPair> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    let has_y = r.headers()?.iter().any(|h| h.trim() == "y");
    let names: &[&str] = if has_y { &["x", "y"] } else { &["x"] };
    let mut cols = read_columns(path, names)?;
    let y = if has_y { cols.pop() } else { None };
    let x = cols.pop().expect("x column");
    let mut pair = SeriesPair::from_series(x, y);

    let meta = meta_path(path);
    if meta.exists() {
        let f = File::open(&meta).map_err(|e| Error::io(&meta, e))?;
        let m: SeriesMeta = serde_json::from_reader(f)?;
        pair.params = m.params;
        pair.stats = m.stats;
        pair.surrogate = m.surrogate;
    }
    Ok(pair)
}

/// `n,value,n_samples`
pub fn write_corr_csv(path: &Path, corr: &CorrFunction) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["n", "value", "n_samples"])?;
    for ((n, v), s) in corr.lags.iter().zip(&corr.values).zip(&corr.n_samples) {
        w.write_record([n.to_string(), fmt_real(*v), s.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DfaSummary {
    pub alpha: f64,
    pub stderr: f64,
    pub fit_min: usize,
    pub fit_max: usize,
    pub order: usize,
}

impl From<&DfaResult> for DfaSummary {
    fn from(r: &DfaResult) -> Self {
        Self {
            alpha: r.alpha,
            stderr: r.fit_stderr,
            fit_min: r.fit_range.0,
            fit_max: r.fit_range.1,
            order: r.order,
        }
    }
}

/// `dfa.csv` → `dfa.summary.json`
pub fn summary_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("summary.json")
}

/// Writes `n,F` rows and the fit summary sidecar.
pub fn write_dfa(path: &Path, result: &DfaResult) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["n", "F"])?;
    for (n, f) in result.window_sizes.iter().zip(&result.fluctuations) {
        w.write_record([n.to_string(), fmt_real(*f)])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    let sp = summary_path(path);
    let mut f = create(&sp)?;
    serde_json::to_writer_pretty(&mut f, &DfaSummary::from(result))?;
    writeln!(f).map_err(|e| Error::io(&sp, e))?;
    f.flush().map_err(|e| Error::io(&sp, e))
}
