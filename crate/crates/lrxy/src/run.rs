//! Executes a [`RunConfig`] and records its outputs in a manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use lrxy_core::analysis::{collapse_fit, shape_chi2_at, FitWindow, FlipRates};
use lrxy_core::coupling::{build_ion_chain_matrix, build_power_law};
use lrxy_core::hydro::{
    evolve_master_equation, golden_rule_rates, Dispersion, LevyKernel, LevyParams, MasterEquationOptions,
};
use lrxy_core::quantum::{
    full_trace_correlation, single_excitation_profile, typicality_trace, EvolutionEngine, Method, Propagator,
};
use lrxy_core::sampling::{
    draw_ensemble_with, EnsembleOptions, Estimator as SamplingEstimator, InitialStateEnsemble, MeasurementPlan,
    MemberEstimate, NoiseOptions, Shots,
};
use lrxy_core::{CorrelationField, CouplingMatrix, IonChainSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{CouplingKind, DispersionKind, EngineMethod, Estimator, HydroMethod, Mode, RunConfig};
use crate::error::CliError;
use crate::io::{self, FitReport};

pub const MANIFEST_NAME: &str = "manifest.json";

/// Command-line overrides applied on top of the configuration.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    /// Worker threads; `0` and `1` both mean single-threaded.
    pub workers: usize,
    pub out: Option<PathBuf>,
    /// Directory that relative paths in the configuration refer to.
    pub base_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: String,
    pub seed: u64,
    pub workers: usize,
    pub started_unix_s: u64,
    pub wall_clock_s: f64,
    pub outputs: Vec<OutputRecord>,
}

/// Collects output files, hashing each as it is written.
struct Outputs {
    dir: PathBuf,
    records: Vec<OutputRecord>,
}

impl Outputs {
    fn new(dir: PathBuf) -> Result<Self, CliError> {
        fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        Ok(Self {
            dir,
            records: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        write_atomic(&path, bytes)?;
        self.records.push(OutputRecord {
            file: name.to_string(),
            sha256: sha256_hex(bytes),
        });
        Ok(path)
    }

    fn write_with(
        &mut self,
        name: &str,
        f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
    ) -> Result<PathBuf, CliError> {
        let mut buf = Vec::new();
        f(&mut buf).map_err(|e| CliError::io(self.dir.join(name), e))?;
        self.write(name, &buf)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes to a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    result.map_err(|e| {
        let _ = fs::remove_file(&tmp);
        CliError::io(path, e)
    })
}

/// Re-hashes every file listed in the manifest of `dir`; returns the names
/// whose contents no longer match.
pub fn verify_manifest(dir: &Path) -> Result<Vec<String>, CliError> {
    let path = dir.join(MANIFEST_NAME);
    let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    let manifest: RunManifest = serde_json::from_str(&text).map_err(|e| CliError::Format {
        path: path.clone(),
        line: e.line(),
        message: e.to_string(),
    })?;
    let mut bad = Vec::new();
    for rec in &manifest.outputs {
        match fs::read(dir.join(&rec.file)) {
            Ok(bytes) if sha256_hex(&bytes) == rec.sha256 => {}
            _ => bad.push(rec.file.clone()),
        }
    }
    Ok(bad)
}

fn resolve(base: &Option<PathBuf>, p: &Path) -> PathBuf {
    match base {
        Some(b) if p.is_relative() => b.join(p),
        _ => p.to_path_buf(),
    }
}

/// Builds the coupling matrix named by the configuration.
pub fn build_couplings(config: &RunConfig, base_dir: &Option<PathBuf>) -> Result<CouplingMatrix, CliError> {
    let c = &config.coupling;
    let missing = |field: &str| CliError::config(field, "required by the coupling source");
    match c.kind.ok_or_else(|| missing("coupling.kind"))? {
        CouplingKind::PowerLaw => {
            let l = config.chain.length.ok_or_else(|| missing("chain.length"))?;
            Ok(build_power_law(
                l,
                c.j.ok_or_else(|| missing("coupling.j"))?,
                c.alpha.ok_or_else(|| missing("coupling.alpha"))?,
            )?)
        }
        CouplingKind::IonChain => {
            let spec = IonChainSpec::uniform(
                config.chain.length.ok_or_else(|| missing("chain.length"))?,
                c.axial_frequency_hz.ok_or_else(|| missing("coupling.axial_frequency_hz"))?,
                c.radial_frequencies_hz.ok_or_else(|| missing("coupling.radial_frequencies_hz"))?,
                c.rabi_frequency.ok_or_else(|| missing("coupling.rabi_frequency"))?,
                c.beatnote_detuning_hz.ok_or_else(|| missing("coupling.beatnote_detuning_hz"))?,
                c.lamb_dicke_scale.ok_or_else(|| missing("coupling.lamb_dicke_scale"))?,
            );
            Ok(build_ion_chain_matrix(&spec)?)
        }
        CouplingKind::File => {
            let path = resolve(base_dir, c.path.as_deref().ok_or_else(|| missing("coupling.path"))?);
            let m = io::load_coupling(&path, c.j)?;
            if let Some(l) = config.chain.length {
                if l != m.size() {
                    return Err(CliError::config(
                        "chain.length",
                        format!("{} has {} sites, configuration says {l}", path.display(), m.size()),
                    ));
                }
            }
            Ok(m)
        }
    }
}

fn engine_of(config: &RunConfig) -> EvolutionEngine {
    let e = &config.engine;
    EvolutionEngine {
        method: match e.method {
            EngineMethod::Krylov => Method::Krylov,
            EngineMethod::Dense => Method::DenseEigen,
        },
        krylov_dim: e.krylov_dim,
        step_tolerance: e.tolerance,
        dense_cap: e.dense_cap,
    }
}

/// Evaluates every ensemble member, spreading them over `workers` scoped
/// threads. Results are collected in member order, so the reduction does not
/// depend on the worker count.
pub fn evaluate_members(
    est: &SamplingEstimator<'_>,
    props: &[Option<Propagator<'_>>],
    workers: usize,
) -> lrxy_core::Result<Vec<MemberEstimate>> {
    let n = est.member_count();
    let workers = workers.clamp(1, n.max(1));
    if workers == 1 {
        return (0..n).map(|u| est.evaluate_member(props, u)).collect();
    }
    let mut slots: Vec<Option<lrxy_core::Result<MemberEstimate>>> = (0..n).map(|_| None).collect();
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                s.spawn(move || {
                    (w..n)
                        .step_by(workers)
                        .map(|u| (u, est.evaluate_member(props, u)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (u, r) in h.join().expect("member worker panicked") {
                slots[u] = Some(r);
            }
        }
    });
    slots.into_iter().map(|r| r.expect("every member evaluated")).collect()
}

/// `LevyKernel::profile` with the times split across worker threads.
fn kernel_profile(kernel: &LevyKernel, sites: &[i64], times: &[f64], workers: usize) -> lrxy_core::Result<CorrelationField> {
    let workers = workers.clamp(1, times.len().max(1));
    if workers == 1 {
        return kernel.profile(sites, times);
    }
    let chunk = times.len().div_ceil(workers);
    let parts: Vec<lrxy_core::Result<CorrelationField>> = std::thread::scope(|s| {
        let handles: Vec<_> = times
            .chunks(chunk)
            .map(|ts| s.spawn(move || kernel.profile(sites, ts)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("kernel worker panicked")).collect()
    });
    let mut values = Vec::with_capacity(sites.len() * times.len());
    for p in parts {
        values.extend_from_slice(p?.values());
    }
    let sigmas = vec![0.0; values.len()];
    CorrelationField::new(times.to_vec(), sites.to_vec(), values, sigmas)
}

fn quantum_field(
    config: &RunConfig,
    matrix: &CouplingMatrix,
    times: &[f64],
    seed: u64,
    opts: &RunOptions,
    out: &mut Outputs,
) -> Result<CorrelationField, CliError> {
    let l = matrix.size();
    let center = config.center(l);
    let engine = engine_of(config);
    match config.quantum.estimator {
        Estimator::Trace => Ok(full_trace_correlation(matrix, times, center, config.engine.brute_force_cap)?),
        Estimator::Typicality => Ok(typicality_trace(engine, matrix, times, center, config.quantum.samples, seed)?),
        Estimator::Sampling => {
            let e = &config.ensemble;
            let ensemble: InitialStateEnsemble = match &e.path {
                Some(p) => {
                    let ens = io::load_ensemble(&resolve(&opts.base_dir, p))?;
                    if ens.length() != l {
                        return Err(CliError::config("ensemble.path", "ensemble length differs from the chain"));
                    }
                    ens
                }
                None => draw_ensemble_with(
                    l,
                    e.members,
                    center,
                    seed,
                    EnsembleOptions {
                        remainder_magnetization: e.remainder_magnetization,
                        bias_cancel: e.bias_cancel,
                    },
                )?,
            };
            out.write_with("ensemble.txt", |w| io::write_ensemble(w, &ensemble))?;
            let shots = if e.shots == 0 { Shots::Exact } else { Shots::Finite(e.shots) };
            let plan = MeasurementPlan::new(ensemble.len(), shots, seed)?;
            let n = &config.noise;
            let decay = (n.decay_rate > 0.0 || n.flip_rate > 0.0)
                .then(|| FlipRates::new(n.decay_rate, n.flip_rate))
                .transpose()?;
            let noise = NoiseOptions {
                prep_flip_probability: n.prep_flip_probability,
                decay,
            };
            let est = SamplingEstimator::new(&ensemble, matrix, times, plan, noise)?;
            let props = est.propagators(engine)?;
            let members = evaluate_members(&est, &props, opts.workers)?;
            Ok(est.reduce(&members)?)
        }
    }
}

fn hydro_field(config: &RunConfig, times: &[f64], workers: usize) -> Result<CorrelationField, CliError> {
    let h = &config.hydro;
    let missing = |f: &str| CliError::config(f, "required in hydro mode");
    let alpha = h.alpha.ok_or_else(|| missing("hydro.alpha"))?;
    let lambda = h.lambda.ok_or_else(|| missing("hydro.lambda"))?;
    let l = config.chain.length.ok_or_else(|| missing("chain.length"))?;
    let params = LevyParams::new(alpha, lambda)?;
    let half = (l / 2) as i64;
    let sites: Vec<i64> = (-half..=half).collect();
    match h.method {
        HydroMethod::Kernel => {
            let dispersion = match h.dispersion {
                DispersionKind::Lattice => Dispersion::Lattice,
                DispersionKind::Diffusive => Dispersion::Diffusive {
                    diffusion: h.diffusion.unwrap_or(lambda / (2.0 * alpha - 3.0)),
                },
            };
            let kernel = LevyKernel::new(params, dispersion)?;
            Ok(kernel_profile(&kernel, &sites, times, workers)?)
        }
        HydroMethod::Master => {
            let rates = golden_rule_rates(params, l)?;
            let mut f0 = vec![0.0; l];
            f0[l / 2] = 1.0;
            let traj = evolve_master_equation(&rates, &f0, times, MasterEquationOptions::default())?;
            let values: Vec<f64> = traj.into_iter().flatten().collect();
            let sigmas = vec![0.0; values.len()];
            Ok(CorrelationField::new(times.to_vec(), sites, values, sigmas)?)
        }
    }
}

fn analyze(config: &RunConfig, field: &CorrelationField, out: &mut Outputs) -> Result<(), CliError> {
    let a = &config.analysis;
    let alpha = config
        .analysis_alpha()
        .ok_or_else(|| CliError::config("analysis.alpha", "the collapse fit needs alpha"))?;
    let j = config.nominal_j();
    let mut window = match j {
        Some(j) => FitWindow::for_coupling(j),
        None => FitWindow::default(),
    };
    if let Some(t) = a.t_min {
        window.t_min = t;
    }
    if let Some(t) = a.t_max {
        window.t_max = t;
    }
    window.max_offset = a.max_offset;
    window.edge_exclusion = a.edge_exclusion;
    let fit = collapse_fit(field, alpha, &window, a.beta_fixed)?;
    out.write("fit.json", FitReport::new(&fit, j).to_json().as_bytes())?;
    if a.shape {
        let last = field.times().len() - 1;
        let s = shape_chi2_at(field, last, a.shape_central)?;
        let json = serde_json::json!({
            "time_s": field.times()[last],
            "chi2_lorentzian": s.lorentzian,
            "chi2_gaussian": s.gaussian,
            "lorentzian": { "amplitude": s.lorentzian_params.0, "width": s.lorentzian_params.1 },
            "gaussian": { "amplitude": s.gaussian_params.0, "width": s.gaussian_params.1 },
            "n_points": s.n_points,
        });
        let mut text = serde_json::to_string_pretty(&json).expect("shape report serializes");
        text.push('\n');
        out.write("shape.json", text.as_bytes())?;
    }
    Ok(())
}

/// Which part of the pipeline to execute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Everything the configured mode asks for.
    Run,
    /// Only the coupling matrix.
    Couplings,
    /// Only the collapse fit on `analysis.input`.
    Collapse,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Run => "run",
            Command::Couplings => "couplings",
            Command::Collapse => "collapse",
        }
    }
}

/// Runs `command` and writes the manifest last. Returns the output directory.
pub fn execute(command: Command, config: &RunConfig, config_text: &str, opts: &RunOptions) -> Result<PathBuf, CliError> {
    let started = Instant::now();
    let started_unix_s = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let seed = opts.seed.unwrap_or(config.seed);
    let dir = match &opts.out {
        Some(o) => o.clone(),
        None => resolve(&opts.base_dir, &config.output),
    };
    let mut out = Outputs::new(dir.clone())?;

    match command {
        Command::Couplings => {
            let m = build_couplings(config, &opts.base_dir)?;
            out.write_with("couplings.csv", |w| io::write_coupling_csv(w, &m))?;
        }
        Command::Collapse => {
            let input = config
                .analysis
                .input
                .as_deref()
                .ok_or_else(|| CliError::config("analysis.input", "collapse needs a correlation CSV"))?;
            let field = io::load_correlation(&resolve(&opts.base_dir, input))?;
            analyze(config, &field, &mut out)?;
        }
        Command::Run => {
            let times = || config.times().map_err(|m| CliError::config("times", m));
            let field = match config.mode {
                Mode::Quantum => {
                    let m = build_couplings(config, &opts.base_dir)?;
                    out.write_with("couplings.csv", |w| io::write_coupling_csv(w, &m))?;
                    Some(quantum_field(config, &m, &times()?, seed, opts, &mut out)?)
                }
                Mode::SingleExcitation => {
                    let m = build_couplings(config, &opts.base_dir)?;
                    out.write_with("couplings.csv", |w| io::write_coupling_csv(w, &m))?;
                    let times = times()?;
                    let center = config.center(m.size());
                    let profile = single_excitation_profile(&m, center, &times)?;
                    let values: Vec<f64> = profile.into_iter().flatten().collect();
                    let sigmas = vec![0.0; values.len()];
                    Some(CorrelationField::new(
                        times,
                        CorrelationField::chain_sites(m.size(), center),
                        values,
                        sigmas,
                    )?)
                }
                Mode::Hydro => Some(hydro_field(config, &times()?, opts.workers)?),
                Mode::Analyze => None,
            };
            match field {
                Some(f) => {
                    out.write_with("correlation.csv", |w| io::write_correlation_csv(w, &f))?;
                    if config.analysis.fit {
                        analyze(config, &f, &mut out)?;
                    }
                }
                None => {
                    let input = config
                        .analysis
                        .input
                        .as_deref()
                        .ok_or_else(|| CliError::config("analysis.input", "analyze mode needs a correlation CSV"))?;
                    let f = io::load_correlation(&resolve(&opts.base_dir, input))?;
                    analyze(config, &f, &mut out)?;
                }
            }
        }
    }

    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: command.name().to_string(),
        config: config_text.to_string(),
        seed,
        workers: opts.workers.max(1),
        started_unix_s,
        wall_clock_s: started.elapsed().as_secs_f64(),
        outputs: out.records.clone(),
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    write_atomic(&dir.join(MANIFEST_NAME), text.as_bytes())?;
    Ok(dir)
}
