//! Run configuration, result emission and atomic file writes.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{
    CapacityRow, CrossingRow, DecayFit, EstimationResult, FMode, LowerBoundStudy, StretchRow, UnionCapacityRow,
    CODE_VERSION,
};
use crate::topology::PairMode;
use crate::walk::GreenIterate;

/// Writes through `fill` into a temporary file next to `path`, then renames
/// it into place.
pub fn atomic_write(path: &Path, fill: impl FnOnce(&mut std::fs::File) -> Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    fill(tmp.as_file_mut())?;
    tmp.as_file_mut().flush()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Every parameter of a run. Keys follow the usual symbols: `N` is the
/// window half-width, `L` the coarse scale, `K` the separation, `C` the
/// stretch constant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub d: usize,
    #[serde(rename = "N")]
    pub n: i64,
    /// Window sizes for sweeps.
    #[serde(rename = "Ns", skip_serializing_if = "Vec::is_empty")]
    pub ns: Vec<i64>,
    pub kappa: i64,
    #[serde(rename = "L", skip_serializing_if = "Option::is_none")]
    pub l: Option<i64>,
    #[serde(rename = "K")]
    pub k: i64,
    pub h: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h2: Option<f64>,
    pub epsilon: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_star: Option<f64>,
    pub alpha: i64,
    #[serde(rename = "C", skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    pub c1: f64,
    /// Replace `c1` by a quantile of sampled `η / L`.
    pub calibrate_c1: bool,
    /// Constant `M` of the scale schedule.
    #[serde(rename = "M")]
    pub m_const: f64,
    pub n_samples: u64,
    pub seed: u64,
    pub f_mode: FMode,
    pub pair_mode: PairMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            d: 3,
            n: 16,
            ns: Vec::new(),
            kappa: crate::field::DEFAULT_KAPPA,
            l: None,
            k: crate::lattice::DEFAULT_SEPARATION,
            h: 0.0,
            h1: None,
            h2: None,
            epsilon: 0.25,
            delta: None,
            h_star: None,
            alpha: 2,
            c: None,
            c1: 20.0,
            calibrate_c1: false,
            m_const: 1.0,
            n_samples: 100,
            seed: 0,
            f_mode: FMode::OuterBoundary,
            pair_mode: PairMode::Extremal,
            output: None,
        }
    }
}

fn key_err(key: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        reason: reason.into(),
    }
}

/// First backquoted word of a deserializer message, which names the key.
fn quoted_key(msg: &str) -> Option<String> {
    let start = msg.find('`')? + 1;
    let len = msg[start..].find('`')?;
    Some(msg[start..start + len].to_string())
}

/// Key of the `key = value` line containing byte `pos`.
fn key_at(doc: &str, pos: usize) -> Option<String> {
    let start = doc[..pos.min(doc.len())].rfind('\n').map_or(0, |i| i + 1);
    let line = doc[start..].lines().next()?;
    let key = line.split('=').next()?.trim().trim_matches('"');
    (!key.is_empty()).then(|| key.to_string())
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d < crate::lattice::MIN_DIM {
            return Err(key_err("d", format!("dimension must be >= 3, got {}", self.d)));
        }
        if self.n < 1 {
            return Err(key_err("N", "window half-width must be >= 1"));
        }
        if self.ns.iter().any(|&n| n < 1) || self.ns.windows(2).any(|w| w[0] >= w[1]) {
            return Err(key_err("Ns", "sizes must be positive and increasing"));
        }
        if self.kappa < 1 {
            return Err(key_err("kappa", "padding factor must be >= 1"));
        }
        if self.l.is_some_and(|l| l < 1) {
            return Err(key_err("L", "coarse scale must be >= 1"));
        }
        if self.k < 1 {
            return Err(key_err("K", "separation must be >= 1"));
        }
        for (key, v) in [
            ("h", Some(self.h)),
            ("h1", self.h1),
            ("h2", self.h2),
            ("epsilon", Some(self.epsilon)),
            ("delta", self.delta),
            ("h_star", self.h_star),
            ("C", self.c),
            ("c1", Some(self.c1)),
            ("M", Some(self.m_const)),
        ] {
            if v.is_some_and(|x| !x.is_finite()) {
                return Err(key_err(key, "must be finite"));
            }
        }
        if let (Some(a), Some(b)) = (self.h1, self.h2) {
            if a > b {
                return Err(key_err("h1", format!("h1 = {a} exceeds h2 = {b}")));
            }
        }
        if !(self.epsilon > 0.0) {
            return Err(key_err("epsilon", "must be positive"));
        }
        if self.delta.is_some_and(|x| !(x > 0.0)) {
            return Err(key_err("delta", "must be positive"));
        }
        if self.alpha < 1 {
            return Err(key_err("alpha", "must be >= 1"));
        }
        if !(self.c1 > 0.0) {
            return Err(key_err("c1", "must be positive"));
        }
        if !(self.m_const > 0.0) {
            return Err(key_err("M", "must be positive"));
        }
        if self.n_samples < 1 {
            return Err(key_err("n_samples", "need at least one sample"));
        }
        Ok(())
    }

    /// Parses and validates a TOML document.
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(s).map_err(|e| {
            let msg = e.message().to_string();
            let key = quoted_key(&msg)
                .or_else(|| e.span().and_then(|r| key_at(s, r.start)))
                .unwrap_or_else(|| "<document>".into());
            key_err(&key, msg)
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| key_err("<document>", e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    /// `h₁`, defaulting to `h + ε`.
    pub fn h1(&self) -> f64 {
        self.h1.unwrap_or(self.h + self.epsilon)
    }

    /// `h₂`, defaulting to `h + 2ε`.
    pub fn h2(&self) -> f64 {
        self.h2.unwrap_or(self.h + 2.0 * self.epsilon)
    }
}

/// One cell of a result table.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    UInt(u64),
    Bool(bool),
    Text(String),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Float(x) => format!("{x:.16e}"),
            Cell::Int(x) => x.to_string(),
            Cell::UInt(x) => x.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<i64> for Cell {
    fn from(x: i64) -> Self {
        Cell::Int(x)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::UInt(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::UInt(x as u64)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(x: Option<T>) -> Self {
        x.map_or(Cell::Empty, Into::into)
    }
}

/// A result row with a fixed column order.
pub trait Record: Serialize {
    const COLUMNS: &'static [&'static str];

    fn cells(&self) -> Vec<Cell>;
}

/// Name of the first NaN-valued column of `r`.
pub fn first_nan<R: Record>(r: &R) -> Option<&'static str> {
    R::COLUMNS
        .iter()
        .zip(r.cells())
        .find(|(_, c)| matches!(c, Cell::Float(x) if x.is_nan()))
        .map(|(name, _)| *name)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    /// From the file extension; CSV unless it is `.json`.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => OutputFormat::Json,
            _ => OutputFormat::Csv,
        }
    }
}

#[derive(Serialize)]
struct JsonDocument<'a, C: Serialize, R: Serialize> {
    version: &'static str,
    config: &'a C,
    records: &'a [R],
}

fn check_records<R: Record>(records: &[R]) -> Result<()> {
    for r in records {
        let cells = r.cells();
        if cells.len() != R::COLUMNS.len() {
            return Err(Error::invalid(
                "record",
                format!("{} cells for {} columns", cells.len(), R::COLUMNS.len()),
            ));
        }
        if let Some(name) = first_nan(r) {
            return Err(Error::NotANumber(name.to_string()));
        }
    }
    Ok(())
}

/// Writes the table to `out`. CSV output starts with `#` lines holding the
/// version and the configuration as JSON; JSON output is
/// `{version, config, records}`.
pub fn write_results<R: Record, C: Serialize>(
    records: &[R],
    config: &C,
    format: OutputFormat,
    out: &mut dyn Write,
) -> Result<()> {
    check_records(records)?;
    match format {
        OutputFormat::Json => {
            let doc = JsonDocument {
                version: CODE_VERSION,
                config,
                records,
            };
            serde_json::to_writer_pretty(&mut *out, &doc)?;
            writeln!(out)?;
        }
        OutputFormat::Csv => {
            writeln!(out, "# version: {CODE_VERSION}")?;
            writeln!(out, "# config: {}", serde_json::to_string(config)?)?;
            let mut w = csv::Writer::from_writer(out);
            w.write_record(R::COLUMNS)?;
            for r in records {
                w.write_record(r.cells().iter().map(Cell::render))?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

/// [`write_results`] into `path`, atomically. Nothing is written when a
/// record holds a NaN.
pub fn emit_results<R: Record, C: Serialize>(
    records: &[R],
    config: &C,
    format: OutputFormat,
    path: &Path,
) -> Result<()> {
    check_records(records)?;
    atomic_write(path, |f| {
        let mut buf = std::io::BufWriter::new(f);
        write_results(records, config, format, &mut buf)?;
        buf.flush()?;
        Ok(())
    })
}

/// Parses the CSV written by [`write_results`] back into string rows,
/// skipping the `#` header lines.
pub fn read_csv_rows(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
    let header = r.headers()?.iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|x| x.iter().map(String::from).collect()))
        .collect::<std::result::Result<_, _>>()?;
    Ok((header, rows))
}

impl Record for EstimationResult {
    const COLUMNS: &'static [&'static str] = &[
        "event",
        "d",
        "N",
        "kappa",
        "n_samples",
        "successes",
        "p_hat",
        "ci_low",
        "ci_high",
        "censored",
        "seed",
        "variance_deficit",
        "version",
    ];

    fn cells(&self) -> Vec<Cell> {
        vec![
            serde_json::to_string(&self.event).unwrap_or_default().into(),
            self.config.d.into(),
            self.config.n.into(),
            self.config.kappa.into(),
            self.n_samples.into(),
            self.successes.into(),
            self.p_hat.into(),
            self.ci_low.into(),
            self.ci_high.into(),
            (self.successes == 0).into(),
            self.seed.into(),
            self.variance_deficit.into(),
            self.version.clone().into(),
        ]
    }
}

impl Record for StretchRow {
    const COLUMNS: &'static [&'static str] = &[
        "N",
        "samples",
        "successes",
        "p_hat",
        "ci_low",
        "ci_high",
        "censored",
        "with_pairs",
        "variance_deficit",
    ];

    fn cells(&self) -> Vec<Cell> {
        vec![
            self.n.into(),
            self.samples.into(),
            self.successes.into(),
            self.p_hat.into(),
            self.ci_low.into(),
            self.ci_high.into(),
            self.censored.into(),
            self.with_pairs.into(),
            self.variance_deficit.into(),
        ]
    }
}

impl Record for CrossingRow {
    const COLUMNS: &'static [&'static str] = &[
        "N",
        "h",
        "n_samples",
        "successes",
        "p_hat",
        "ci_low",
        "ci_high",
        "censored",
    ];

    fn cells(&self) -> Vec<Cell> {
        let e = &self.estimate;
        vec![
            self.n.into(),
            self.h.into(),
            e.n_samples.into(),
            e.successes.into(),
            e.p_hat.into(),
            e.ci_low.into(),
            e.ci_high.into(),
            (e.successes == 0).into(),
        ]
    }
}

impl Record for DecayFit {
    const COLUMNS: &'static [&'static str] = &["model", "coefficient", "residual_ss", "points"];

    fn cells(&self) -> Vec<Cell> {
        vec![
            serde_json::to_value(self.model)
                .ok()
                .and_then(|v| v.as_str().map(String::from))
                .unwrap_or_default()
                .into(),
            self.coefficient.into(),
            self.residual_ss.into(),
            self.points.into(),
        ]
    }
}

impl Record for CapacityRow {
    const COLUMNS: &'static [&'static str] = &["N", "sites", "exposed", "capacity", "ratio", "cap_exceeded"];

    fn cells(&self) -> Vec<Cell> {
        vec![
            self.n.into(),
            self.sites.into(),
            self.exposed.into(),
            self.capacity.into(),
            self.ratio.into(),
            self.cap_exceeded.into(),
        ]
    }
}

impl Record for UnionCapacityRow {
    const COLUMNS: &'static [&'static str] = &["m", "L", "capacity", "ratio"];

    fn cells(&self) -> Vec<Cell> {
        vec![self.m.into(), self.l.into(), self.capacity.into(), self.ratio.into()]
    }
}

impl Record for GreenIterate {
    const COLUMNS: &'static [&'static str] = &["M", "lower", "extrapolated"];

    fn cells(&self) -> Vec<Cell> {
        vec![self.m.into(), self.lower.into(), self.extrapolated.into()]
    }
}

impl Record for LowerBoundStudy {
    const COLUMNS: &'static [&'static str] = &[
        "N",
        "alpha",
        "epsilon",
        "h",
        "h_star",
        "delta",
        "samples",
        "planted",
        "D",
        "E",
        "F",
        "G",
        "DF",
        "df_stated_violations",
        "df_confined_violations",
        "g_violations",
        "min_rho_given_df",
    ];

    fn cells(&self) -> Vec<Cell> {
        let c = &self.config;
        vec![
            c.n.into(),
            c.alpha.into(),
            c.epsilon.into(),
            c.h.into(),
            c.h_star.into(),
            self.delta.into(),
            c.samples.into(),
            c.planted.into(),
            self.d.into(),
            self.e.into(),
            self.f.into(),
            self.g.into(),
            self.df.into(),
            self.df_stated_violations.into(),
            self.df_confined_violations.into(),
            self.g_violations.into(),
            self.min_rho_given_df.map(u64::from).into(),
        ]
    }
}
