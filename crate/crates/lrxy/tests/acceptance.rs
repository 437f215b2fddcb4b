//! Acceptance suite. Prints one PASS/FAIL line per criterion and a summary.
//! With `LRXY_STRICT=1` any failed criterion makes the process exit nonzero;
//! by default the suite reports and exits cleanly so that the rest of the
//! workspace tests still run. Criterion 13 runs only with `LRXY_EXTENDED=1`.

use std::f64::consts::PI;
use std::time::Instant;

use lrxy_core::analysis::{
    autocorr_powerlaw_fit, collapse_fit, fit_flip_rates, magnetization_decay, shape_chi2, shape_chi2_at,
    short_time_expansion, FitWindow, FlipRates, MagnetizationSeries,
};
use lrxy_core::coupling::build_power_law;
use lrxy_core::hydro::{
    c_alpha, evolve_master_equation, golden_rule_rates, predicted_scaling, stable_density, Dispersion, LevyKernel,
    LevyParams, MasterEquationOptions, StableDistribution,
};
use lrxy_core::quad::adaptive;
use lrxy_core::quantum::{
    full_trace_correlation, measure_sigma_z, sector_trace_correlation, typicality_trace, EvolutionEngine, Propagator,
    QuantumState, SectorBasis,
};
use lrxy_core::sampling::{
    draw_ensemble, estimate_correlation, Estimator, MeasurementPlan, NoiseOptions, Shots,
};
use lrxy_core::{CorrelationField, CouplingMatrix};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

type Check = Result<(bool, String), String>;

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}

fn geomspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| a * (b / a).powf(k as f64 / (n - 1) as f64)).collect()
}

fn info(msg: impl AsRef<str>) {
    println!("      info: {}", msg.as_ref());
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Remainder up-counts of a default ensemble and its conjugates.
fn sampled_sectors(l: usize) -> [usize; 2] {
    let rest = l - 1;
    let up = if rest.is_multiple_of(2) { rest / 2 } else { (rest - 1) / 2 };
    [up, rest - up]
}

fn c1_trace_oracle() -> Check {
    let l = 12;
    let center = l / 2;
    let times = linspace(0.0, 6.0, 25);
    let mut ok = true;
    let mut parts = Vec::new();
    for alpha in [1.0, 1.5] {
        let m = build_power_law(l, 1.0, alpha).map_err(err)?;
        let ensemble = draw_ensemble(l, 240, center, 2024).map_err(err)?;
        let est = estimate_correlation(
            &ensemble,
            EvolutionEngine::dense(),
            &m,
            &times,
            MeasurementPlan::exact(240).map_err(err)?,
            NoiseOptions::default(),
        )
        .map_err(err)?;
        let full = full_trace_correlation(&m, &times, center, 14).map_err(err)?;
        let restricted = sector_trace_correlation(&m, &times, center, &sampled_sectors(l)).map_err(err)?;
        let mut worst: f64 = 0.0;
        let mut worst_restricted: f64 = 0.0;
        let mut bias: f64 = 0.0;
        for k in 0..est.values().len() {
            let s = est.sigmas()[k];
            let d = (est.values()[k] - full.values()[k]).abs();
            let dr = (est.values()[k] - restricted.values()[k]).abs();
            bias = bias.max((restricted.values()[k] - full.values()[k]).abs());
            let score = |d: f64| if s > 0.0 { d / s } else if d < 1e-12 { 0.0 } else { f64::INFINITY };
            worst = worst.max(score(d));
            worst_restricted = worst_restricted.max(score(dr));
        }
        ok &= worst <= 3.0;
        parts.push(format!("alpha={alpha}: max |dC|/sigma = {worst:.2}"));
        info(format!(
            "alpha={alpha}: vs sampled-sector trace max |dC|/sigma = {worst_restricted:.2}; \
             sector-vs-full trace bias up to {bias:.4}"
        ));
    }
    Ok((ok, parts.join(", ") + " (limit 3)"))
}

fn c2_typicality() -> Check {
    let l = 12;
    let r = 10;
    let bound = 5.0 * 2f64.powf(-(l as f64) / 2.0) / (r as f64).sqrt();
    let times = linspace(0.0, 6.0, 13);
    let mut ok = true;
    let mut parts = Vec::new();
    for alpha in [1.0, 1.5] {
        let m = build_power_law(l, 1.0, alpha).map_err(err)?;
        let typ = typicality_trace(EvolutionEngine::krylov(), &m, &times, l / 2, r, 7).map_err(err)?;
        let full = full_trace_correlation(&m, &times, l / 2, 14).map_err(err)?;
        let sup = typ
            .values()
            .iter()
            .zip(full.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        ok &= sup <= bound;
        parts.push(format!("alpha={alpha}: sup {sup:.2e}"));
    }
    Ok((ok, format!("{} (limit {bound:.2e})", parts.join(", "))))
}

fn c3_ed_consistency() -> Check {
    let l = 10;
    let m = build_power_law(l, 1.0, 1.1).map_err(err)?;
    let times = linspace(0.0, 8.0, 17);
    let ensemble = draw_ensemble(l, 60, l / 2, 5).map_err(err)?;
    let plan = MeasurementPlan::exact(60).map_err(err)?;
    let krylov = estimate_correlation(&ensemble, EvolutionEngine::krylov(), &m, &times, plan, NoiseOptions::default())
        .map_err(err)?;
    let dense = estimate_correlation(&ensemble, EvolutionEngine::dense(), &m, &times, plan, NoiseOptions::default())
        .map_err(err)?;
    let c = l / 2;
    let dev = (0..times.len())
        .map(|t| (krylov.value(t, c) - dense.value(t, c)).abs())
        .fold(0.0, f64::max);
    Ok((dev <= 1e-8, format!("max |C0 Krylov - C0 dense| = {dev:.2e} (limit 1e-8)")))
}

fn quantum_conservation(m: &CouplingMatrix, ensemble_seed: u64, times: &[f64]) -> Result<(f64, f64), String> {
    let l = m.size();
    let ensemble = draw_ensemble(l, 20, l / 2, ensemble_seed).map_err(err)?;
    let mut norm_drift: f64 = 0.0;
    let mut mag_drift: f64 = 0.0;
    for &config in ensemble.members() {
        let n = config.count_ones() as usize;
        let basis = SectorBasis::new(l, n).map_err(err)?;
        let prop = Propagator::new(EvolutionEngine::krylov(), m, &basis).map_err(err)?;
        let psi = QuantumState::product(&basis, config).map_err(err)?;
        let target = 2.0 * n as f64 - l as f64;
        prop.trajectory(&psi, times, |_, s| {
            norm_drift = norm_drift.max((s.norm() - 1.0).abs());
            let total: f64 = measure_sigma_z(&basis, s)?.iter().sum();
            mag_drift = mag_drift.max((total - target).abs());
            Ok(())
        })
        .map_err(err)?;
    }
    Ok((norm_drift, mag_drift))
}

fn c4_conservation() -> Check {
    let times = linspace(0.0, 20.0, 41);
    let mut norm: f64 = 0.0;
    let mut mag: f64 = 0.0;
    for alpha in [0.9, 1.5] {
        let m = build_power_law(12, 1.0, alpha).map_err(err)?;
        let (a, b) = quantum_conservation(&m, 3, &times)?;
        norm = norm.max(a);
        mag = mag.max(b);
    }
    let l = 401;
    let rates = golden_rule_rates(LevyParams::new(1.1, 1.0).map_err(err)?, l).map_err(err)?;
    let mtimes = linspace(0.0, 50.0, 26);
    let mut f0 = vec![0.0; l];
    f0[l / 2] = 1.0;
    let traj = evolve_master_equation(&rates, &f0, &mtimes, MasterEquationOptions::default()).map_err(err)?;
    let sum_drift = traj
        .iter()
        .map(|f| (f.iter().sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max);
    let uniform = vec![1.0 / l as f64; l];
    let traj = evolve_master_equation(&rates, &uniform, &mtimes, MasterEquationOptions::default()).map_err(err)?;
    let fixed = traj
        .iter()
        .flat_map(|f| f.iter().map(|v| (v - 1.0 / l as f64).abs()))
        .fold(0.0, f64::max);
    let ok = norm <= 1e-9 && mag <= 1e-9 && sum_drift <= 1e-12 && fixed <= 1e-12;
    Ok((
        ok,
        format!(
            "norm drift {norm:.1e}, sum sigma_z drift {mag:.1e} (limit 1e-9); master sum drift {sum_drift:.1e}, \
             uniform drift {fixed:.1e} (limit 1e-12)"
        ),
    ))
}

fn c5_levy_vs_master() -> Check {
    let l = 2001;
    let params = LevyParams::new(1.1, 1.0).map_err(err)?;
    let times: Vec<f64> = (1..=50).map(f64::from).collect();
    let rates = golden_rule_rates(params, l).map_err(err)?;
    let mut f0 = vec![0.0; l];
    f0[l / 2] = 1.0;
    let traj = evolve_master_equation(&rates, &f0, &times, MasterEquationOptions::default()).map_err(err)?;
    let kernel = LevyKernel::new(params, Dispersion::Lattice).map_err(err)?;
    let mut worst: f64 = 0.0;
    for (ti, &t) in times.iter().enumerate() {
        for j in -50i64..=50 {
            let a = kernel.solution(j, t).map_err(err)?;
            let idx = (l as i64 / 2 + j) as usize;
            worst = worst.max((a - traj[ti][idx]).abs());
        }
    }
    Ok((worst < 1e-3, format!("max |kernel - master| = {worst:.2e} over 101 sites, t in [1, 50] (limit 1e-3)")))
}

fn c0_slope(kernel: &LevyKernel, times: &[f64]) -> Result<f64, String> {
    let c0: Vec<f64> = times.iter().map(|&t| kernel.solution(0, t)).collect::<Result<_, _>>().map_err(err)?;
    autocorr_powerlaw_fit(times, &c0, times[0], times[times.len() - 1]).map_err(err)
}

fn c6_exponents() -> Check {
    let times = geomspace(10.0, 1000.0, 41);
    let mut ok = true;
    let mut parts = Vec::new();
    for (alpha, dispersion) in [
        (1.5, Dispersion::Diffusive { diffusion: 1.0 }),
        (1.1, Dispersion::Lattice),
        (0.9, Dispersion::Lattice),
    ] {
        let kernel = LevyKernel::new(LevyParams::new(alpha, 1.0).map_err(err)?, dispersion).map_err(err)?;
        let p = c0_slope(&kernel, &times)?;
        let target = if alpha >= 1.5 { 0.5 } else { 1.0 / (2.0 * alpha - 1.0) };
        let rel = (p / target - 1.0).abs();
        ok &= rel <= 0.03;
        parts.push(format!("alpha={alpha}: {p:.4} vs {target:.4} ({:.2}%)", 100.0 * rel));
    }
    let lattice = LevyKernel::new(LevyParams::new(1.5, 1.0).map_err(err)?, Dispersion::Lattice).map_err(err)?;
    info(format!(
        "alpha=1.5 on the exact lattice rates gives {:.4} over lambda t in [10, 1000] (logarithmic correction)",
        c0_slope(&lattice, &times)?
    ));
    Ok((ok, parts.join(", ") + " (limit 3%)"))
}

fn kernel_field(kernel: &LevyKernel, half: i64, times: &[f64]) -> Result<CorrelationField, String> {
    let sites: Vec<i64> = (-half..=half).collect();
    kernel.profile(&sites, times).map_err(err)
}

fn c7_transport() -> Check {
    let times = geomspace(10.0, 100.0, 8);
    let mut ok = true;
    let mut parts = Vec::new();
    for alpha in [0.9, 1.1] {
        let kernel = LevyKernel::new(LevyParams::new(alpha, 1.0).map_err(err)?, Dispersion::Lattice).map_err(err)?;
        let field = kernel_field(&kernel, 60, &times)?;
        let fit = collapse_fit(&field, alpha, &FitWindow::default(), true).map_err(err)?;
        let target = c_alpha(alpha).map_err(err)?;
        let rel = (fit.diffusion / target - 1.0).abs();
        ok &= rel <= 0.1;
        parts.push(format!("alpha={alpha}: D={:.4} vs {target:.4} ({:.1}%)", fit.diffusion, 100.0 * rel));
    }
    let params = LevyParams::new(2.0, 1.0).map_err(err)?;
    let predicted = predicted_scaling(params).map_err(err)?.diffusion.ok_or("no diffusion constant")?;
    let kernel = LevyKernel::new(params, Dispersion::Diffusive { diffusion: predicted }).map_err(err)?;
    let field = kernel_field(&kernel, 60, &times)?;
    let fit = collapse_fit(&field, 2.0, &FitWindow::default(), true).map_err(err)?;
    let rel = (fit.diffusion / predicted - 1.0).abs();
    ok &= rel <= 0.1;
    parts.push(format!("alpha=2: D={:.4} vs {predicted:.4} ({:.1}%)", fit.diffusion, 100.0 * rel));

    let lattice = LevyKernel::new(params, Dispersion::Lattice).map_err(err)?;
    let field = kernel_field(&lattice, 60, &times)?;
    let fit = collapse_fit(&field, 2.0, &FitWindow::default(), true).map_err(err)?;
    info(format!(
        "alpha=2 on the exact lattice rates: D={:.4}; the lattice sum gives zeta(2) lambda = {:.4}",
        fit.diffusion,
        PI * PI / 6.0
    ));
    Ok((ok, parts.join(", ") + " (limit 10%)"))
}

fn c8_shapes() -> Check {
    let sites: Vec<i64> = (-13..=13).collect();
    let sigmas = vec![0.01; sites.len()];
    let noise = Normal::new(0.0, 0.01).map_err(err)?;
    let mut ok = true;
    let mut parts = Vec::new();
    for (alpha, want_lorentzian) in [(1.1, true), (1.5, false)] {
        let dist = StableDistribution::new(alpha).map_err(err)?;
        let clean: Vec<f64> = sites.iter().map(|&j| dist.density(j as f64)).collect();
        let (mut wins, mut sum_l, mut sum_g) = (0, 0.0, 0.0);
        for seed in 0..100u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let values: Vec<f64> = clean.iter().map(|c| c + noise.sample(&mut rng)).collect();
            let r = shape_chi2(&sites, &values, &sigmas, None).map_err(err)?;
            if (r.lorentzian < r.gaussian) == want_lorentzian {
                wins += 1;
            }
            sum_l += r.lorentzian;
            sum_g += r.gaussian;
        }
        let (ml, mg) = (sum_l / 100.0, sum_g / 100.0);
        ok &= wins >= 95 && ((ml < mg) == want_lorentzian);
        parts.push(format!("alpha={alpha}: wins {wins}/100, mean chi2_L={ml:.2}, chi2_G={mg:.2}"));
    }
    Ok((ok, parts.join("; ") + " (win limit 95)"))
}

fn c9_short_time() -> Check {
    let l = 10;
    let m = build_power_law(l, 1.0, 1.1).map_err(err)?;
    let times: Vec<f64> = (0..7).map(|k| 0.4 / 2f64.powi(k)).collect();
    let exact = full_trace_correlation(&m, &times, l / 2, 14).map_err(err)?;
    let ste = short_time_expansion(&m, l / 2, &times).map_err(err)?;
    let ratios: Vec<f64> = (0..times.len())
        .map(|k| (exact.value(k, l / 2) - ste.value(k, l / 2)).abs() / times[k].powi(3))
        .collect();
    let bounded = ratios.iter().all(|r| r.is_finite()) && ratios.windows(2).all(|w| w[1] <= w[0] * 1.01 + 1e-9);
    let shown: Vec<String> = ratios.iter().map(|r| format!("{r:.2e}")).collect();
    Ok((bounded, format!("|dC0|/(Jt)^3 for Jt = 0.4 / 2^k: [{}] (non-increasing)", shown.join(", "))))
}

fn c10_shot_noise() -> Check {
    let l = 8;
    let m = build_power_law(l, 1.0, 1.0).map_err(err)?;
    let times = [0.5, 1.0, 2.0];
    let ensemble = draw_ensemble(l, 60, l / 2, 77).map_err(err)?;
    let seeds = 200;
    let n = times.len() * l;
    let mut sum = vec![0.0; n];
    let mut sum2 = vec![0.0; n];
    let mut sigma = vec![0.0; n];
    // sector propagators are shared across seeds
    let mut runs = Vec::new();
    for seed in 0..seeds {
        let plan = MeasurementPlan::new(60, Shots::Finite(100), seed).map_err(err)?;
        runs.push(plan);
    }
    let first = Estimator::new(&ensemble, &m, &times, runs[0], NoiseOptions::default()).map_err(err)?;
    let props = first.propagators(EvolutionEngine::dense()).map_err(err)?;
    for plan in &runs {
        let est = Estimator::new(&ensemble, &m, &times, *plan, NoiseOptions::default()).map_err(err)?;
        let members = (0..est.member_count())
            .map(|u| est.evaluate_member(&props, u))
            .collect::<Result<Vec<_>, _>>()
            .map_err(err)?;
        let f = est.reduce(&members).map_err(err)?;
        for k in 0..n {
            sum[k] += f.values()[k];
            sum2[k] += f.values()[k] * f.values()[k];
            sigma[k] += f.sigmas()[k];
        }
    }
    let s = seeds as f64;
    let mut worst: f64 = 0.0;
    let mut ratios = Vec::new();
    for k in 0..n {
        let mean = sum[k] / s;
        let sd = ((sum2[k] / s - mean * mean) * s / (s - 1.0)).max(0.0).sqrt();
        let formula = sigma[k] / s;
        let r = sd / formula;
        ratios.push(r);
        worst = worst.max((r - 1.0).abs());
    }
    ratios.sort_by(f64::total_cmp);
    Ok((
        worst <= 0.2,
        format!(
            "empirical sd / formula over {n} points: median {:.3}, range [{:.3}, {:.3}] (limit 20%)",
            ratios[n / 2],
            ratios[0],
            ratios[n - 1]
        ),
    ))
}

fn c11_special_functions() -> Check {
    let ca = (c_alpha(1.0).map_err(err)? - PI).abs();
    let ys = linspace(-10.0, 10.0, 2001);
    let mut lor: f64 = 0.0;
    let mut gau: f64 = 0.0;
    for &y in &ys {
        lor = lor.max((stable_density(1.0, y).map_err(err)? - 1.0 / (PI * (1.0 + y * y))).abs());
        gau = gau.max((stable_density(1.5, y).map_err(err)? - (-y * y / 4.0).exp() / (4.0 * PI).sqrt()).abs());
    }
    let mut norm: f64 = 0.0;
    for a in [0.9, 1.1, 1.3] {
        let d = StableDistribution::new(a).map_err(err)?;
        let y0 = 60.0;
        let pts = [0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, y0];
        let mut body = 0.0;
        for w in pts.windows(2) {
            body += adaptive(|y| d.density(y), w[0], w[1], 1e-13, 1e-13, 2000).map_err(err)?.0;
        }
        let total = 2.0 * (body + d.tail_mass(y0).map_err(err)?);
        norm = norm.max((total - 1.0).abs());
    }
    let ok = ca <= 1e-10 && lor <= 1e-8 && gau <= 1e-8 && norm <= 1e-6;
    Ok((
        ok,
        format!("|c_1 - pi| = {ca:.1e}, Lorentzian {lor:.1e}, Gaussian {gau:.1e}, max |int F - 1| = {norm:.1e}"),
    ))
}

fn c12_decay_model() -> Check {
    let truth = FlipRates::new(0.91, 0.78).map_err(err)?;
    let times = linspace(0.0, 3.0, 61);
    let clean = |p0: f64| -> Result<MagnetizationSeries, String> {
        Ok(MagnetizationSeries {
            p0,
            values: times.iter().map(|&t| magnetization_decay(&truth, p0, t)).collect::<Result<_, _>>().map_err(err)?,
        })
    };
    let series: Vec<MagnetizationSeries> = [0.0, 0.5, 1.0].iter().map(|&p| clean(p)).collect::<Result<_, _>>()?;
    let fit = fit_flip_rates(&series, &times).map_err(err)?;
    let exact_err = (fit.rates.gamma_decay - 0.91).abs().max((fit.rates.gamma_flip - 0.78).abs());

    let noise = Normal::new(0.0, 0.02).map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(412);
    let noisy: Vec<MagnetizationSeries> = series
        .iter()
        .map(|s| MagnetizationSeries {
            p0: s.p0,
            values: s.values.iter().map(|v| v + noise.sample(&mut rng)).collect(),
        })
        .collect();
    let nfit = fit_flip_rates(&noisy, &times).map_err(err)?;
    let rel = ((nfit.rates.gamma_decay / 0.91 - 1.0).abs()).max((nfit.rates.gamma_flip / 0.78 - 1.0).abs());
    Ok((
        exact_err <= 1e-6 && rel <= 0.1,
        format!(
            "noiseless error {exact_err:.1e} (limit 1e-6); noisy Gamma={:.3}, gamma={:.3}, worst {:.1}% (limit 10%)",
            nfit.rates.gamma_decay,
            nfit.rates.gamma_flip,
            100.0 * rel
        ),
    ))
}

fn c13_extended() -> Check {
    let l = 21;
    let m = build_power_law(l, 1.0, 1.5).map_err(err)?;
    let times = [0.0, 5.0, 10.0];
    let ensemble = draw_ensemble(l, 120, l / 2, 13).map_err(err)?;
    let field = estimate_correlation(
        &ensemble,
        EvolutionEngine::krylov(),
        &m,
        &times,
        MeasurementPlan::exact(120).map_err(err)?,
        NoiseOptions::default(),
    )
    .map_err(err)?;
    let r = shape_chi2_at(&field, times.len() - 1, None).map_err(err)?;
    Ok((
        r.gaussian < r.lorentzian,
        format!("Jt=10: chi2_L={:.2}, chi2_G={:.2}", r.lorentzian, r.gaussian),
    ))
}

fn main() {
    #[allow(clippy::type_complexity)]
    let criteria: Vec<(u32, &str, fn() -> Check)> = vec![
        (1, "trace-oracle equivalence", c1_trace_oracle),
        (2, "typicality equivalence", c2_typicality),
        (3, "ED self-consistency", c3_ed_consistency),
        (4, "conservation suite", c4_conservation),
        (5, "Levy analytic vs master equation", c5_levy_vs_master),
        (6, "exponent recovery", c6_exponents),
        (7, "transport-coefficient closure", c7_transport),
        (8, "shape discrimination", c8_shapes),
        (9, "short-time order", c9_short_time),
        (10, "error-formula validation", c10_shot_noise),
        (11, "special functions", c11_special_functions),
        (12, "decay-model regression", c12_decay_model),
    ];
    let mut failed = Vec::new();
    for (id, name, f) in criteria {
        let start = Instant::now();
        let (pass, detail) = match f() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        println!(
            "[{id:>2}] {} {name}: {detail} ({:.1} s)",
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
        if !pass {
            failed.push(id);
        }
    }
    if std::env::var("LRXY_EXTENDED").as_deref() == Ok("1") {
        let start = Instant::now();
        let (pass, detail) = c13_extended().unwrap_or_else(|e| (false, format!("error: {e}")));
        println!(
            "[13] {} extended L=21 shape run: {detail} ({:.1} s)",
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    } else {
        println!("[13] SKIP extended L=21 shape run: not CI-gating, set LRXY_EXTENDED=1 to run (hours)");
    }
    if failed.is_empty() {
        println!("acceptance: all gating criteria passed");
    } else {
        println!("acceptance: FAILED criteria {failed:?}");
        if std::env::var("LRXY_STRICT").as_deref() == Ok("1") {
            std::process::exit(1);
        }
    }
}
