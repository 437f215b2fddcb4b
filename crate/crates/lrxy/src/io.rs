//! Plain-text file formats: coupling matrices, correlation fields, ensembles
//! and fit reports.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufRead, Write};
use std::path::Path;

use lrxy_core::analysis::ScalingFit;
use lrxy_core::sampling::InitialStateEnsemble;
use lrxy_core::{CorrelationField, CouplingMatrix};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Symmetry tolerance applied when loading a coupling matrix.
pub const COUPLING_SYMMETRY_TOLERANCE: f64 = 1e-9;

/// A parse failure with its 1-based line number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl ParseError {
    fn new(line: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            message: message.into(),
        }
    }

    pub fn at(self, path: &Path) -> CliError {
        CliError::Format {
            path: path.to_path_buf(),
            line: self.line,
            message: self.message,
        }
    }
}

#[derive(Debug)]
pub enum ReadError {
    Io(io::Error),
    Parse(ParseError),
}

impl From<io::Error> for ReadError {
    fn from(e: io::Error) -> Self {
        ReadError::Io(e)
    }
}

impl From<ParseError> for ReadError {
    fn from(e: ParseError) -> Self {
        ReadError::Parse(e)
    }
}

impl ReadError {
    pub fn at(self, path: &Path) -> CliError {
        match self {
            ReadError::Io(e) => CliError::io(path, e),
            ReadError::Parse(e) => e.at(path),
        }
    }
}

fn parse_f64(s: &str, line: usize) -> Result<f64, ParseError> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| ParseError::new(line, format!("not a number: {:?}", s.trim())))
}

fn header_fields(line: &str) -> Option<BTreeMap<&str, &str>> {
    let body = line.trim().strip_prefix('#')?;
    Some(body.split_whitespace().filter_map(|kv| kv.split_once('=')).collect())
}

/// `# L=<n>` followed by `n` rows of `n` comma-separated values in rad/s.
pub fn write_coupling_csv<W: Write>(mut w: W, matrix: &CouplingMatrix) -> io::Result<()> {
    let n = matrix.size();
    writeln!(w, "# L={n}")?;
    for i in 0..n {
        let row: Vec<String> = matrix.row(i).iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// Reads the coupling CSV and checks symmetry. Without `nominal_j` the
/// nominal scale is the largest nearest-neighbour magnitude.
pub fn read_coupling_csv<R: BufRead>(r: R, nominal_j: Option<f64>) -> Result<CouplingMatrix, ReadError> {
    let mut lines = r.lines().enumerate();
    let (_, first) = lines.next().ok_or_else(|| ParseError::new(1, "empty file"))?;
    let first = first?;
    let n: usize = header_fields(&first)
        .and_then(|h| h.get("L").and_then(|v| v.parse().ok()))
        .ok_or_else(|| ParseError::new(1, "expected header `# L=<n>`"))?;
    let mut entries = Vec::with_capacity(n * n);
    let mut rows = 0;
    for (k, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != n {
            return Err(ParseError::new(k + 1, format!("expected {n} values, found {}", fields.len())).into());
        }
        for f in fields {
            entries.push(parse_f64(f, k + 1)?);
        }
        rows += 1;
    }
    if rows != n {
        return Err(ParseError::new(rows + 1, format!("expected {n} rows, found {rows}")).into());
    }
    let j = nominal_j.unwrap_or_else(|| (0..n - 1).map(|i| entries[i * n + i + 1].abs()).fold(0.0, f64::max));
    CouplingMatrix::from_entries(n, entries, j, None, COUPLING_SYMMETRY_TOLERANCE)
        .map_err(|e| ParseError::new(1, e.to_string()).into())
}

pub const CORRELATION_HEADER: &str = "time_s,site,C,sigma_C";

/// One row per `(t, j)`, time-major, columns `time_s,site,C,sigma_C`.
pub fn write_correlation_csv<W: Write>(mut w: W, field: &CorrelationField) -> io::Result<()> {
    writeln!(w, "{CORRELATION_HEADER}")?;
    for (ti, t) in field.times().iter().enumerate() {
        for (si, j) in field.sites().iter().enumerate() {
            writeln!(w, "{t},{j},{},{}", field.value(ti, si), field.sigma(ti, si))?;
        }
    }
    Ok(())
}

/// Reads a correlation CSV. Rows may come in any order but must cover a
/// full `times × sites` grid exactly once.
pub fn read_correlation_csv<R: BufRead>(r: R) -> Result<CorrelationField, ReadError> {
    let mut rows: Vec<(usize, f64, i64, f64, f64)> = Vec::new();
    let mut header_seen = false;
    for (k, line) in r.lines().enumerate() {
        let line = line?;
        let n = k + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if !header_seen {
            let cols: Vec<&str> = trimmed.split(',').map(str::trim).collect();
            if cols.join(",") != CORRELATION_HEADER {
                return Err(ParseError::new(n, format!("expected header `{CORRELATION_HEADER}`")).into());
            }
            header_seen = true;
            continue;
        }
        let f: Vec<&str> = trimmed.split(',').collect();
        if f.len() != 4 {
            return Err(ParseError::new(n, format!("expected 4 columns, found {}", f.len())).into());
        }
        let site = f[1]
            .trim()
            .parse::<i64>()
            .map_err(|_| ParseError::new(n, format!("site is not an integer: {:?}", f[1].trim())))?;
        rows.push((n, parse_f64(f[0], n)?, site, parse_f64(f[2], n)?, parse_f64(f[3], n)?));
    }
    if rows.is_empty() {
        return Err(ParseError::new(1, "no data rows").into());
    }
    let mut times: Vec<f64> = rows.iter().map(|r| r.1).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let mut sites: Vec<i64> = rows.iter().map(|r| r.2).collect();
    sites.sort_unstable();
    sites.dedup();
    let (nt, ns) = (times.len(), sites.len());
    let mut values = vec![f64::NAN; nt * ns];
    let mut sigmas = vec![0.0; nt * ns];
    for &(line, t, j, c, s) in &rows {
        let ti = times.binary_search_by(|x| x.total_cmp(&t)).unwrap();
        let si = sites.binary_search(&j).unwrap();
        if !values[ti * ns + si].is_nan() {
            return Err(ParseError::new(line, format!("duplicate row for t={t}, site={j}")).into());
        }
        values[ti * ns + si] = c;
        sigmas[ti * ns + si] = s;
    }
    if rows.len() != nt * ns {
        return Err(ParseError::new(rows.last().unwrap().0, "rows do not cover a full time × site grid").into());
    }
    CorrelationField::new(times, sites, values, sigmas).map_err(|e| ParseError::new(1, e.to_string()).into())
}

/// `# L=<n> center=<i> seed=<s>` then one line of `u`/`d` per member,
/// character `i` giving site `i`.
pub fn write_ensemble<W: Write>(mut w: W, ensemble: &InitialStateEnsemble) -> io::Result<()> {
    writeln!(
        w,
        "# L={} center={} seed={}",
        ensemble.length(),
        ensemble.center(),
        ensemble.seed()
    )?;
    for &config in ensemble.members() {
        let s: String = (0..ensemble.length())
            .map(|i| if config >> i & 1 == 1 { 'u' } else { 'd' })
            .collect();
        writeln!(w, "{s}")?;
    }
    Ok(())
}

pub fn read_ensemble<R: BufRead>(r: R) -> Result<InitialStateEnsemble, ReadError> {
    let mut lines = r.lines().enumerate();
    let (_, first) = lines.next().ok_or_else(|| ParseError::new(1, "empty file"))?;
    let first = first?;
    let header = header_fields(&first).ok_or_else(|| ParseError::new(1, "expected `# L=<n> center=<i> seed=<s>`"))?;
    let get = |key: &str| -> Result<u64, ParseError> {
        header
            .get(key)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| ParseError::new(1, format!("header lacks a valid `{key}`")))
    };
    let (length, center, seed) = (get("L")? as usize, get("center")? as usize, get("seed")?);
    let mut members = Vec::new();
    for (k, line) in lines {
        let line = line?;
        let s = line.trim();
        if s.is_empty() {
            continue;
        }
        if s.len() != length {
            return Err(ParseError::new(k + 1, format!("expected {length} spins, found {}", s.len())).into());
        }
        let mut config = 0u64;
        for (i, c) in s.chars().enumerate() {
            match c {
                'u' => config |= 1 << i,
                'd' => {}
                _ => return Err(ParseError::new(k + 1, format!("unexpected character {c:?}")).into()),
            }
        }
        members.push(config);
    }
    InitialStateEnsemble::from_members(length, center, seed, members)
        .map_err(|e| ParseError::new(1, e.to_string()).into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportWindow {
    pub t_min: f64,
    pub t_max: f64,
    pub site_min: i64,
    pub site_max: i64,
}

/// JSON form of a [`ScalingFit`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub alpha: f64,
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(rename = "D_over_J")]
    pub d_over_j: Option<f64>,
    pub beta: f64,
    pub beta_fixed: bool,
    pub chi2_reduced: f64,
    pub window: ReportWindow,
    pub covariance: Vec<f64>,
    pub n_points: usize,
}

impl FitReport {
    pub fn new(fit: &ScalingFit, j_nominal: Option<f64>) -> Self {
        Self {
            alpha: fit.alpha,
            d: fit.diffusion,
            d_over_j: j_nominal.map(|j| fit.d_over_j(j)),
            beta: fit.beta,
            beta_fixed: fit.beta_fixed,
            chi2_reduced: fit.reduced_chi2,
            window: ReportWindow {
                t_min: fit.time_range.0,
                t_max: fit.time_range.1,
                site_min: fit.site_range.0,
                site_max: fit.site_range.1,
            },
            covariance: fit.covariance.clone(),
            n_points: fit.n_points,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("fit report serializes");
        s.push('\n');
        s
    }
}

/// Convenience wrappers over files.
pub fn load_correlation(path: &Path) -> Result<CorrelationField, CliError> {
    let f = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    read_correlation_csv(io::BufReader::new(f)).map_err(|e| e.at(path))
}

pub fn load_coupling(path: &Path, nominal_j: Option<f64>) -> Result<CouplingMatrix, CliError> {
    let f = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    read_coupling_csv(io::BufReader::new(f), nominal_j).map_err(|e| e.at(path))
}

pub fn load_ensemble(path: &Path) -> Result<InitialStateEnsemble, CliError> {
    let f = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    read_ensemble(io::BufReader::new(f)).map_err(|e| e.at(path))
}
