//! TOML run configuration (`schema_version = 1`).
//!
//! Keys are dotted paths (`coupling.alpha = 1.1`); `[section]` tables are
//! equivalent. Parsing reports syntax and type errors with line numbers;
//! [`RunConfig::validate`] adds cross-field checks.

use std::path::PathBuf;

use lrxy_core::hydro::classify_regime;
use lrxy_core::quantum::{binomial, MAX_SITES};
use serde::Deserialize;

use crate::error::Diagnostic;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Quantum,
    Hydro,
    SingleExcitation,
    Analyze,
}

/// Explicit list, or `"linspace(a, b, n)"` / `"geomspace(a, b, n)"`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum TimesSpec {
    List(Vec<f64>),
    Expr(String),
}

impl TimesSpec {
    pub fn resolve(&self) -> Result<Vec<f64>, String> {
        match self {
            TimesSpec::List(v) => Ok(v.clone()),
            TimesSpec::Expr(s) => parse_times(s),
        }
    }
}

fn parse_times(s: &str) -> Result<Vec<f64>, String> {
    let s = s.trim();
    let (name, rest) = s.split_once('(').ok_or_else(|| format!("cannot parse times expression {s:?}"))?;
    let args = rest
        .strip_suffix(')')
        .ok_or_else(|| format!("missing ')' in {s:?}"))?;
    let parts: Vec<&str> = args.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("{name} takes (start, stop, n)"));
    }
    let a: f64 = parts[0].parse().map_err(|_| format!("bad start {:?}", parts[0]))?;
    let b: f64 = parts[1].parse().map_err(|_| format!("bad stop {:?}", parts[1]))?;
    let n: usize = parts[2].parse().map_err(|_| format!("bad count {:?}", parts[2]))?;
    if n == 0 {
        return Err("time count must be positive".into());
    }
    let frac = |k: usize| if n == 1 { 0.0 } else { k as f64 / (n - 1) as f64 };
    match name.trim() {
        "linspace" => Ok((0..n).map(|k| a + (b - a) * frac(k)).collect()),
        "geomspace" => {
            if !(a > 0.0 && b > 0.0) {
                return Err("geomspace needs positive endpoints".into());
            }
            let (la, lb) = (a.ln(), b.ln());
            Ok((0..n)
                .map(|k| match k {
                    0 => a,
                    k if k == n - 1 => b,
                    _ => (la + (lb - la) * frac(k)).exp(),
                })
                .collect())
        }
        other => Err(format!("unknown times function {other:?}")),
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSection {
    pub length: Option<usize>,
    /// Defaults to `length / 2`.
    pub center: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingKind {
    PowerLaw,
    IonChain,
    File,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingSection {
    pub kind: Option<CouplingKind>,
    /// Nominal coupling `J`, rad/s.
    pub j: Option<f64>,
    pub alpha: Option<f64>,
    pub path: Option<PathBuf>,
    pub axial_frequency_hz: Option<f64>,
    pub radial_frequencies_hz: Option<[f64; 2]>,
    /// Uniform Rabi frequency, rad/s.
    pub rabi_frequency: Option<f64>,
    pub beatnote_detuning_hz: Option<f64>,
    pub lamb_dicke_scale: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleSection {
    pub members: usize,
    /// 0 means exact expectation values.
    pub shots: u32,
    pub bias_cancel: bool,
    pub remainder_magnetization: Option<i64>,
    /// Read members from this file instead of drawing them.
    pub path: Option<PathBuf>,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        Self {
            members: 60,
            shots: 0,
            bias_cancel: false,
            remainder_magnetization: None,
            path: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EngineMethod {
    Krylov,
    Dense,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EngineSection {
    pub method: EngineMethod,
    pub krylov_dim: usize,
    pub tolerance: f64,
    pub dense_cap: usize,
    pub brute_force_cap: usize,
}

impl Default for EngineSection {
    fn default() -> Self {
        Self {
            method: EngineMethod::Krylov,
            krylov_dim: 30,
            tolerance: 1e-12,
            dense_cap: 20_000,
            brute_force_cap: 14,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSection {
    pub prep_flip_probability: f64,
    /// Spontaneous decay rate, 1/s.
    pub decay_rate: f64,
    /// Symmetric flip rate, 1/s.
    pub flip_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    #[default]
    Sampling,
    Trace,
    Typicality,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuantumSection {
    pub estimator: Estimator,
    /// Random states for the typicality estimator.
    pub samples: usize,
}

impl Default for QuantumSection {
    fn default() -> Self {
        Self {
            estimator: Estimator::Sampling,
            samples: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum HydroMethod {
    #[default]
    Kernel,
    Master,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum DispersionKind {
    #[default]
    Lattice,
    Diffusive,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HydroSection {
    pub alpha: Option<f64>,
    pub lambda: Option<f64>,
    pub method: HydroMethod,
    pub dispersion: DispersionKind,
    /// Diffusion constant of the diffusive branch; defaults to `λ/(2α − 3)`.
    pub diffusion: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSection {
    /// Run the collapse fit after a quantum or hydro simulation.
    pub fit: bool,
    /// Correlation CSV for analyze mode.
    pub input: Option<PathBuf>,
    pub alpha: Option<f64>,
    /// Nominal `J` for `D_over_J`; falls back to `coupling.j`.
    pub j: Option<f64>,
    pub beta_fixed: bool,
    /// Lower time bound (exclusive); defaults to `5/J` when `J` is known.
    pub t_min: Option<f64>,
    pub t_max: Option<f64>,
    pub max_offset: Option<i64>,
    pub edge_exclusion: usize,
    /// Also fit Lorentzian and Gaussian shapes to the last time slice.
    pub shape: bool,
    pub shape_central: Option<usize>,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self {
            fit: false,
            input: None,
            alpha: None,
            j: None,
            beta_fixed: true,
            t_min: None,
            t_max: None,
            max_offset: None,
            edge_exclusion: 2,
            shape: false,
            shape_central: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub mode: Mode,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    pub times: Option<TimesSpec>,
    #[serde(default)]
    pub chain: ChainSection,
    #[serde(default)]
    pub coupling: CouplingSection,
    #[serde(default)]
    pub ensemble: EnsembleSection,
    #[serde(default)]
    pub engine: EngineSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub quantum: QuantumSection,
    #[serde(default)]
    pub hydro: HydroSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
}

fn default_output() -> PathBuf {
    PathBuf::from("lrxy-out")
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line on which a dotted key is assigned, either written out in full or as
/// its last segment inside the matching `[table]`.
fn locate(text: &str, field: &str) -> Option<usize> {
    let (table, key) = match field.rsplit_once('.') {
        Some((t, k)) => (t, k),
        None => ("", field),
    };
    let mut current = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim().to_string();
            continue;
        }
        let Some((lhs, _)) = line.split_once('=') else { continue };
        let lhs: String = lhs.split('.').map(str::trim).collect::<Vec<_>>().join(".");
        let full = if current.is_empty() {
            lhs.clone()
        } else {
            format!("{current}.{lhs}")
        };
        if full == field || (current == table && lhs == key) {
            return Some(i + 1);
        }
    }
    None
}

impl RunConfig {
    /// Parses and validates `text`, collecting every diagnostic found.
    pub fn parse(text: &str) -> Result<Self, Vec<Diagnostic>> {
        let config = Self::parse_unchecked(text)?;
        config.check(text)?;
        Ok(config)
    }

    /// Syntax and schema only; no cross-field checks.
    pub fn parse_unchecked(text: &str) -> Result<Self, Vec<Diagnostic>> {
        toml::from_str(text).map_err(|e| {
            vec![Diagnostic {
                field: "<toml>".into(),
                line: e.span().map(|s| line_of(text, s.start)),
                message: e.message().trim().to_string(),
            }]
        })
    }

    /// [`validate`](Self::validate) with diagnostics located in `text`.
    pub fn check(&self, text: &str) -> Result<(), Vec<Diagnostic>> {
        let mut diags = self.validate();
        for d in &mut diags {
            if d.line.is_none() {
                d.line = locate(text, &d.field);
            }
        }
        if diags.is_empty() {
            Ok(())
        } else {
            Err(diags)
        }
    }

    pub fn times(&self) -> Result<Vec<f64>, String> {
        self.times.as_ref().ok_or_else(|| "times are required".to_string())?.resolve()
    }

    /// Chain length from `chain.length` or the ion count implied by the
    /// coupling source. `None` for file sources until the file is read.
    pub fn length(&self) -> Option<usize> {
        self.chain.length
    }

    pub fn center(&self, length: usize) -> usize {
        self.chain.center.unwrap_or(length / 2)
    }

    /// `α` used for analysis: `analysis.alpha`, then `hydro.alpha`, then
    /// `coupling.alpha`.
    pub fn analysis_alpha(&self) -> Option<f64> {
        self.analysis.alpha.or(self.hydro.alpha).or(self.coupling.alpha)
    }

    pub fn nominal_j(&self) -> Option<f64> {
        self.analysis.j.or(self.coupling.j)
    }

    /// Cross-field checks; an empty list means the configuration can run.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let mut err = |field: &str, message: String| {
            out.push(Diagnostic {
                field: field.into(),
                line: None,
                message,
            })
        };
        if self.schema_version != SCHEMA_VERSION {
            err(
                "schema_version",
                format!("unsupported version {} (expected {SCHEMA_VERSION})", self.schema_version),
            );
        }
        let needs_times = self.mode != Mode::Analyze;
        if needs_times {
            match self.times() {
                Err(m) => err("times", m),
                Ok(t) if t.is_empty() => err("times", "at least one time is required".into()),
                Ok(t) => {
                    if t.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                        err("times", "times must be finite and non-negative".into());
                    } else if t.windows(2).any(|w| w[1] < w[0]) {
                        err("times", "times must be non-decreasing".into());
                    }
                }
            }
        }
        let chain_needed = matches!(self.mode, Mode::Quantum | Mode::SingleExcitation);
        if chain_needed {
            self.validate_coupling(&mut err);
        }
        if let (Some(l), Some(c)) = (self.chain.length, self.chain.center) {
            if c >= l {
                err("chain.center", format!("center {c} outside a chain of {l} sites"));
            }
        }
        match self.mode {
            Mode::Quantum => self.validate_quantum(&mut err),
            Mode::Hydro => self.validate_hydro(&mut err),
            Mode::SingleExcitation => {}
            Mode::Analyze => {
                if self.analysis.input.is_none() {
                    err("analysis.input", "analyze mode needs a correlation CSV".into());
                }
            }
        }
        if self.mode == Mode::Analyze || self.analysis.fit {
            match self.analysis_alpha() {
                None => err("analysis.alpha", "the collapse fit needs alpha".into()),
                Some(a) => {
                    if !classify_regime(a).is_ok_and(|r| r.is_transporting()) {
                        err("analysis.alpha", format!("alpha = {a} has no transporting scaling form"));
                    }
                }
            }
            if let (Some(lo), Some(hi)) = (self.analysis.t_min, self.analysis.t_max) {
                if !(hi > lo) {
                    err("analysis.t_max", "t_max must exceed t_min".into());
                }
            }
            if self.analysis.shape_central.is_some_and(|n| n < 3) {
                err("analysis.shape_central", "shape fits need at least 3 sites".into());
            }
        }
        out
    }

    fn validate_coupling(&self, err: &mut impl FnMut(&str, String)) {
        let c = &self.coupling;
        let positive = |v: Option<f64>| v.is_some_and(|x| x > 0.0 && x.is_finite());
        match c.kind {
            None => err("coupling.kind", "coupling source required (power-law, ion-chain or file)".into()),
            Some(CouplingKind::PowerLaw) => {
                if self.chain.length.is_none() {
                    err("chain.length", "power-law couplings need the chain length".into());
                }
                if !positive(c.j) {
                    err("coupling.j", "power-law couplings need J > 0".into());
                }
                if !c.alpha.is_some_and(|a| a >= 0.0 && a.is_finite()) {
                    err("coupling.alpha", "power-law couplings need alpha >= 0".into());
                }
            }
            Some(CouplingKind::IonChain) => {
                if self.chain.length.is_none_or(|l| l < 2) {
                    err("chain.length", "ion chains need at least two ions".into());
                }
                for (key, v) in [
                    ("coupling.axial_frequency_hz", c.axial_frequency_hz),
                    ("coupling.rabi_frequency", c.rabi_frequency),
                    ("coupling.lamb_dicke_scale", c.lamb_dicke_scale),
                ] {
                    if !positive(v) {
                        err(key, "required and must be positive".into());
                    }
                }
                if !c.radial_frequencies_hz.is_some_and(|r| r.iter().all(|x| *x > 0.0)) {
                    err("coupling.radial_frequencies_hz", "two positive radial frequencies required".into());
                }
                if !c.beatnote_detuning_hz.is_some_and(f64::is_finite) {
                    err("coupling.beatnote_detuning_hz", "required".into());
                }
            }
            Some(CouplingKind::File) => {
                if c.path.is_none() {
                    err("coupling.path", "file couplings need a path".into());
                }
            }
        }
    }

    fn validate_quantum(&self, err: &mut impl FnMut(&str, String)) {
        let e = &self.engine;
        if e.krylov_dim < 2 {
            err("engine.krylov_dim", "must be at least 2".into());
        }
        if !(e.tolerance > 0.0) {
            err("engine.tolerance", "must be positive".into());
        }
        let Some(l) = self.chain.length else {
            if self.coupling.kind == Some(CouplingKind::File) {
                return;
            }
            err("chain.length", "quantum mode needs the chain length".into());
            return;
        };
        if l > MAX_SITES {
            err("chain.length", format!("{l} sites exceed the basis limit of {MAX_SITES}"));
            return;
        }
        match self.quantum.estimator {
            Estimator::Trace => {
                if l > e.brute_force_cap {
                    err(
                        "chain.length",
                        format!("full trace over {l} sites exceeds engine.brute_force_cap = {}", e.brute_force_cap),
                    );
                }
            }
            Estimator::Typicality => {
                if self.quantum.samples == 0 {
                    err("quantum.samples", "at least one random state is required".into());
                }
                if e.method == EngineMethod::Dense {
                    let dim = (0..=l).map(|n| binomial(l, n)).max().unwrap_or(0);
                    if dim > e.dense_cap as u64 {
                        err(
                            "engine.method",
                            format!("dense-eigen sector dimension {dim} exceeds engine.dense_cap = {}", e.dense_cap),
                        );
                    }
                }
            }
            Estimator::Sampling => {
                let m = &self.ensemble;
                if m.path.is_none() && (m.members == 0 || !m.members.is_multiple_of(2)) {
                    err("ensemble.members", "member count must be positive and even".into());
                }
                if !(0.0..=1.0).contains(&self.noise.prep_flip_probability) {
                    err("noise.prep_flip_probability", "must lie in [0, 1]".into());
                }
                if !(self.noise.decay_rate >= 0.0 && self.noise.flip_rate >= 0.0) {
                    err("noise.decay_rate", "rates must be non-negative".into());
                }
                if e.method == EngineMethod::Dense {
                    let dim = sampled_sector_dim(l, m.remainder_magnetization, m.bias_cancel);
                    if dim > e.dense_cap as u64 {
                        err(
                            "engine.method",
                            format!("dense-eigen sector dimension {dim} exceeds engine.dense_cap = {}", e.dense_cap),
                        );
                    }
                }
            }
        }
    }

    fn validate_hydro(&self, err: &mut impl FnMut(&str, String)) {
        let h = &self.hydro;
        if !h.lambda.is_some_and(|v| v > 0.0 && v.is_finite()) {
            err("hydro.lambda", "hydro mode needs lambda > 0".into());
        }
        match h.alpha {
            None => err("hydro.alpha", "hydro mode needs alpha".into()),
            Some(a) => {
                if !classify_regime(a).is_ok_and(|r| r.is_transporting()) {
                    err("hydro.alpha", format!("alpha = {a} is not in a transporting regime"));
                }
                if h.dispersion == DispersionKind::Diffusive && h.diffusion.is_none() && !(a > 1.5) {
                    err("hydro.diffusion", "the diffusive branch needs a diffusion constant below alpha = 3/2".into());
                }
            }
        }
        if h.diffusion.is_some_and(|d| !(d > 0.0)) {
            err("hydro.diffusion", "must be positive".into());
        }
        match self.chain.length {
            None => err("chain.length", "hydro mode needs the number of sites".into()),
            Some(l) if l < 3 || l % 2 == 0 => err("chain.length", "hydro chains need an odd length of at least 3".into()),
            Some(_) => {}
        }
        if self.chain.center.is_some() {
            err("chain.center", "hydro profiles are always centered".into());
        }
    }
}

/// Largest sector visited by the default sampling ensemble.
fn sampled_sector_dim(l: usize, magnetization: Option<i64>, bias_cancel: bool) -> u64 {
    let rest = l.saturating_sub(1);
    let m = magnetization.unwrap_or(if rest.is_multiple_of(2) { 0 } else { -1 });
    let up = ((m + rest as i64) / 2).clamp(0, rest as i64) as usize;
    let mut counts = vec![1 + up, 1 + rest - up];
    if bias_cancel {
        counts.extend([up, rest - up]);
    }
    counts.into_iter().map(|n| binomial(l, n)).max().unwrap_or(0)
}
