//! Momentum-space solution of the lattice master equation for an initially
//! localized excitation, `f_j(t) = ∫_{−π}^{π} dk/2π e^{ikj + W_k t}`.

use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;

use super::{classify_regime, LevyParams};
use crate::error::{domain, invalid, Error, Result};
use crate::field::CorrelationField;
use crate::quad::{adaptive, graded_breakpoints, GaussLegendre};

/// `Σ_{r≥1} (1 − cos kr) / r^s` for `s > 1`, from the Bose-type integral
/// `(1/Γ(s)) ∫_0^∞ x^{s−1} Σ_r (1 − cos kr) e^{−rx} dx`.
fn cosine_deficit(s: f64, k: f64) -> Result<f64> {
    let sin_half = libm::sin(0.5 * k);
    let sigma = sin_half * sin_half;
    if sigma == 0.0 {
        return Ok(0.0);
    }
    // x · Σ_r (1 − cos kr) e^{−rx}, bounded with limit 1 as x → 0
    let xh = |x: f64| -> f64 {
        if x < 1e-300 {
            return 1.0;
        }
        let q = libm::exp(-x);
        let e1 = -libm::expm1(-x);
        x * q * (1.0 + q) * 2.0 * sigma / (e1 * (e1 * e1 + 4.0 * q * sigma))
    };
    let a = k.abs().min(1.0);
    let head = if s < 2.0 {
        // x = a u^p removes the x^{s−2} endpoint singularity
        let p = 1.0 / (s - 1.0);
        let (v, _) = adaptive(|u| xh(a * libm::pow(u, p)), 0.0, 1.0, 0.0, 1e-13, 400)?;
        libm::pow(a, s - 1.0) * p * v
    } else {
        adaptive(|x| libm::pow(x, s - 2.0) * xh(x), 0.0, a, 0.0, 1e-13, 400)?.0
    };
    let mut body = 0.0;
    let mut lo = a;
    for hi in [1.0, 4.0, 16.0, 80.0] {
        if hi > lo {
            body += adaptive(|x| libm::pow(x, s - 2.0) * xh(x), lo, hi, 1e-18 * head.abs(), 1e-13, 400)?.0;
            lo = hi;
        }
    }
    Ok((head + body) / libm::tgamma(s))
}

/// Exact lattice transform of the golden-rule rates,
/// `W_k = −2λ Σ_{r≥1} (1 − cos kr) / r^{2α}`.
///
/// Its small-`k` expansion is `−λ c_α |k|^{2α−1} − λ ζ(2α−2) k² + …`.
pub fn lattice_rate(alpha: f64, lambda: f64, k: f64) -> Result<f64> {
    if !(alpha > 0.5) {
        return Err(domain("lattice rates diverge for alpha <= 0.5"));
    }
    if !(lambda > 0.0) {
        return Err(invalid("lambda must be positive"));
    }
    if !(k.abs() <= PI) {
        return Err(invalid("k must lie in the first Brillouin zone"));
    }
    Ok(-2.0 * lambda * cosine_deficit(2.0 * alpha, k)?)
}

/// Barycentric Chebyshev interpolation of the lattice rates.
#[derive(Debug, Clone)]
struct RateTable {
    /// Rates at the Chebyshev points of each octave, octave 0 being `[π/2, π]`.
    octaves: Vec<[f64; TABLE_NODES]>,
    points: [f64; TABLE_NODES],
    /// Small-`k` power of the rate.
    power: f64,
}

impl RateTable {
    fn new(params: LevyParams) -> Result<Self> {
        let mut points = [0.0; TABLE_NODES];
        for (i, p) in points.iter_mut().enumerate() {
            *p = libm::cos(PI * i as f64 / (TABLE_NODES - 1) as f64);
        }
        let mut octaves = Vec::with_capacity(TABLE_OCTAVES);
        for m in 0..TABLE_OCTAVES {
            let hi = PI * libm::ldexp(1.0, -(m as i32));
            let lo = 0.5 * hi;
            let mut row = [0.0; TABLE_NODES];
            for (v, &x) in row.iter_mut().zip(&points) {
                *v = lattice_rate(params.alpha, params.lambda, lo + 0.5 * (x + 1.0) * (hi - lo))?;
            }
            octaves.push(row);
        }
        Ok(Self {
            octaves,
            points,
            power: (2.0 * params.alpha - 1.0).min(2.0),
        })
    }

    fn rate(&self, k: f64) -> f64 {
        let k = k.abs();
        if k == 0.0 {
            return 0.0;
        }
        let m = libm::floor(libm::log2(PI / k)).max(0.0) as usize;
        if m >= self.octaves.len() {
            // far below the table: leading power from the smallest entry
            let last = self.octaves.len() - 1;
            let hi = PI * libm::ldexp(1.0, -(last as i32));
            return self.octaves[last][0] * libm::pow(k / hi, self.power);
        }
        let hi = PI * libm::ldexp(1.0, -(m as i32));
        let lo = 0.5 * hi;
        let x = (2.0 * k - lo - hi) / (hi - lo);
        let values = &self.octaves[m];
        let mut num = 0.0;
        let mut den = 0.0;
        for (i, (&p, &v)) in self.points.iter().zip(values).enumerate() {
            let d = x - p;
            if d == 0.0 {
                return v;
            }
            let mut w = if i % 2 == 0 { 1.0 } else { -1.0 };
            if i == 0 || i == TABLE_NODES - 1 {
                w *= 0.5;
            }
            let w = w / d;
            num += w * v;
            den += w;
        }
        num / den
    }
}

/// Which rate function enters the momentum-space solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Dispersion {
    /// The exact lattice rates of [`lattice_rate`].
    Lattice,
    /// `W_k = −D k²`, the diffusive branch.
    Diffusive { diffusion: f64 },
}

const PRIMARY_ORDER: usize = 24;
const CHECK_ORDER: usize = 16;
const UNIFORM_PANELS: usize = 1024;
/// Chebyshev nodes per dyadic interval of the rate table.
const TABLE_NODES: usize = 24;
const TABLE_OCTAVES: usize = 52;
const GRADED_LEVELS: usize = 44;
/// Nodes with `W_k t` below this contribute less than `e^{−50}`.
const DECAY_CUTOFF: f64 = -50.0;
/// Absolute tolerance of `f_j(t)`.
pub const SOLUTION_TOLERANCE: f64 = 1e-8;

/// Cached composite Gauss–Legendre rule on `[0, π]` with the rates at every
/// node: geometric panels toward the `|k|^{2α−1}` cusp at `k = 0`, then
/// uniform panels fine enough for `cos(kj)` up to `|j| ≈ 2000`.
/// Lattice rates are interpolated from a Chebyshev table on dyadic
/// intervals `[π 2^{−m−1}, π 2^{−m}]`, on each of which `W_k` is analytic.
/// A second, lower-order rule on the same panels estimates the error.
#[derive(Debug, Clone)]
pub struct LevyKernel {
    params: LevyParams,
    dispersion: Dispersion,
    primary: Vec<(f64, f64, f64)>,
    check: Vec<(f64, f64, f64)>,
}

impl LevyKernel {
    pub fn new(params: LevyParams, dispersion: Dispersion) -> Result<Self> {
        match dispersion {
            Dispersion::Lattice => {
                if !classify_regime(params.alpha)?.is_transporting() {
                    return Err(domain("no hydrodynamic solution in the mean-field regime"));
                }
            }
            Dispersion::Diffusive { diffusion } => {
                if !(diffusion > 0.0) {
                    return Err(invalid("diffusion constant must be positive"));
                }
            }
        }
        let table = match dispersion {
            Dispersion::Lattice => Some(RateTable::new(params)?),
            Dispersion::Diffusive { .. } => None,
        };
        let eval = |k: f64| -> Result<f64> {
            match (dispersion, &table) {
                (Dispersion::Diffusive { diffusion }, _) => Ok(-diffusion * k * k),
                (_, Some(table)) => Ok(table.rate(k)),
                (_, None) => lattice_rate(params.alpha, params.lambda, k),
            }
        };

        let width = PI / UNIFORM_PANELS as f64;
        let first_uniform = width;
        let mut panels: Vec<(f64, f64)> = graded_breakpoints(first_uniform, GRADED_LEVELS, 0.5)
            .windows(2)
            .map(|w| (w[0], w[1]))
            .collect();
        for p in 1..UNIFORM_PANELS {
            panels.push((p as f64 * width, (p + 1) as f64 * width));
        }

        let build = |order: usize| -> Result<Vec<(f64, f64, f64)>> {
            let rule = GaussLegendre::new(order);
            let mut out = Vec::with_capacity(panels.len() * order);
            for &(a, b) in &panels {
                for (k, w) in rule.mapped(a, b) {
                    out.push((k, w, eval(k)?));
                }
            }
            Ok(out)
        };
        Ok(Self {
            params,
            dispersion,
            primary: build(PRIMARY_ORDER)?,
            check: build(CHECK_ORDER)?,
        })
    }

    pub fn params(&self) -> LevyParams {
        self.params
    }

    pub fn dispersion(&self) -> Dispersion {
        self.dispersion
    }

    fn sum(nodes: &[(f64, f64, f64)], j: f64, t: f64) -> f64 {
        nodes
            .iter()
            .filter(|n| n.2 * t > DECAY_CUTOFF)
            .map(|&(k, w, rate)| w * libm::cos(k * j) * libm::exp(rate * t))
            .sum::<f64>()
            / PI
    }

    /// `f_j(t)`; fails with [`Error::Quadrature`] when the two cached rules
    /// disagree by more than [`SOLUTION_TOLERANCE`].
    pub fn solution(&self, j: i64, t: f64) -> Result<f64> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(invalid("time must be finite and non-negative"));
        }
        if t == 0.0 {
            return Ok(if j == 0 { 1.0 } else { 0.0 });
        }
        let j = j as f64;
        let value = Self::sum(&self.primary, j, t);
        let estimate = (value - Self::sum(&self.check, j, t)).abs();
        if estimate > SOLUTION_TOLERANCE {
            return Err(Error::Quadrature {
                estimate,
                tolerance: SOLUTION_TOLERANCE,
            });
        }
        Ok(value)
    }

    /// Profile over `sites` at each of `times`, as a field with zero sigmas.
    pub fn profile(&self, sites: &[i64], times: &[f64]) -> Result<CorrelationField> {
        let mut values = Vec::with_capacity(sites.len() * times.len());
        for &t in times {
            for &j in sites {
                values.push(self.solution(j, t)?);
            }
        }
        let sigmas = alloc::vec![0.0; values.len()];
        CorrelationField::new(times.to_vec(), sites.to_vec(), values, sigmas)
    }
}

/// `f_j(t)` with the exact lattice rates. Builds a fresh [`LevyKernel`];
/// keep one around for repeated evaluation.
pub fn fourier_solution(params: LevyParams, j: i64, t: f64) -> Result<f64> {
    LevyKernel::new(params, Dispersion::Lattice)?.solution(j, t)
}

pub fn fourier_solution_with(params: LevyParams, dispersion: Dispersion, j: i64, t: f64) -> Result<f64> {
    LevyKernel::new(params, dispersion)?.solution(j, t)
}

pub fn fourier_profile(
    params: LevyParams,
    dispersion: Dispersion,
    sites: &[i64],
    times: &[f64],
) -> Result<CorrelationField> {
    LevyKernel::new(params, dispersion)?.profile(sites, times)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hydro::{c_alpha, evolve_master_equation, fourier_rate, golden_rule_rates};

    fn brute_deficit(s: f64, k: f64) -> f64 {
        // direct sum plus the integral tail, good to ~1e-9 for s ≥ 2
        let n = 200_000;
        let mut sum = 0.0;
        for r in (1..=n).rev() {
            let r = r as f64;
            sum += (1.0 - libm::cos(k * r)) / libm::pow(r, s);
        }
        sum + libm::pow(n as f64 + 0.5, 1.0 - s) / (s - 1.0)
    }

    #[test]
    fn clausen_closed_forms() {
        for &k in &[1e-6, 0.01, 0.3, 1.0, 2.5, PI] {
            let s2 = PI * k / 2.0 - k * k / 4.0;
            assert!((cosine_deficit(2.0, k).unwrap() - s2).abs() < 1e-12 * s2.max(1e-10), "k {k}");
            let s4 = PI * PI * k * k / 12.0 - PI * k * k * k / 12.0 + k.powi(4) / 48.0;
            assert!((cosine_deficit(4.0, k).unwrap() - s4).abs() < 1e-12 * s4.max(1e-20), "k {k}");
        }
    }

    #[test]
    fn matches_direct_sum() {
        for &s in &[1.8, 2.2, 3.0] {
            for &k in &[0.2, 1.3, 3.0] {
                let a = cosine_deficit(s, k).unwrap();
                let b = brute_deficit(s, k);
                assert!((a - b).abs() < 1e-6 * b, "s {s} k {k}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn small_k_leading_term() {
        let k = 1e-5;
        let w = lattice_rate(1.1, 1.0, k).unwrap();
        let lead = -c_alpha(1.1).unwrap() * libm::pow(k, 1.2);
        assert!((w / lead - 1.0).abs() < 1e-3);
        // diffusive regime: W_k / k² → −λ ζ(2α − 2), ζ(2) = π²/6 at α = 2
        let w = lattice_rate(2.0, 1.0, 1e-4).unwrap();
        assert!((w / -1e-8 - PI * PI / 6.0).abs() < 1e-3);
        assert_eq!(lattice_rate(1.1, 1.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn rate_table_interpolates() {
        let params = LevyParams::new(0.9, 1.3).unwrap();
        let table = RateTable::new(params).unwrap();
        for i in 1..200 {
            let k = PI * libm::pow(10.0, -9.0 * i as f64 / 200.0);
            let exact = lattice_rate(0.9, 1.3, k).unwrap();
            assert!((table.rate(k) / exact - 1.0).abs() < 1e-12, "k {k}");
        }
    }

    #[test]
    fn continuum_form_fails_at_the_zone_edge() {
        assert!(fourier_rate(1.1, 1.0, PI).unwrap() > 0.0);
        assert!(lattice_rate(1.1, 1.0, PI).unwrap() < 0.0);
    }

    #[test]
    fn lorentzian_limit_at_alpha_one() {
        // W_k = −λ(π|k| − k²/2), so at late times f_j ≈ Lorentzian of width πλt
        let params = LevyParams::new(1.0, 1.0).unwrap();
        let kernel = LevyKernel::new(params, Dispersion::Lattice).unwrap();
        let t = 400.0;
        let w = PI * t;
        for &j in &[0i64, 100, 500, 2000] {
            let f = kernel.solution(j, t).unwrap();
            let lorentz = w / (PI * (w * w + (j * j) as f64));
            assert!((f / lorentz - 1.0).abs() < 5e-3, "j {j}");
        }
    }

    #[test]
    fn symmetric_and_normalized() {
        let params = LevyParams::new(1.1, 1.0).unwrap();
        let kernel = LevyKernel::new(params, Dispersion::Lattice).unwrap();
        let t = 1.0;
        for j in 1..30 {
            assert!((kernel.solution(j, t).unwrap() - kernel.solution(-j, t).unwrap()).abs() < 1e-15);
        }
        // the heavy tail is summed with its continuum remainder
        let n = 1500;
        let mut total = kernel.solution(0, t).unwrap();
        for j in 1..=n {
            total += 2.0 * kernel.solution(j, t).unwrap();
        }
        // beyond n the profile is dominated by single jumps, t λ / j^{2α}
        let approx_tail = 2.0 * t / (1.2 * libm::pow(n as f64 + 0.5, 1.2));
        assert!((total + approx_tail - 1.0).abs() < 1e-6, "{total}");
    }

    #[test]
    fn agrees_with_master_equation() {
        let params = LevyParams::new(1.1, 1.0).unwrap();
        let l = 401;
        let w = golden_rule_rates(params, l).unwrap();
        let mut f0 = alloc::vec![0.0; l];
        f0[200] = 1.0;
        let times = [1.0, 4.0];
        let f = evolve_master_equation(&w, &f0, &times, Default::default()).unwrap();
        let kernel = LevyKernel::new(params, Dispersion::Lattice).unwrap();
        for (row, &t) in f.iter().zip(&times) {
            for j in -20i64..=20 {
                let a = row[(200 + j) as usize];
                let b = kernel.solution(j, t).unwrap();
                // the short chain lacks jumps longer than 200 sites
                assert!((a - b).abs() < 1e-3, "t {t} j {j}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn diffusive_branch_is_a_lattice_gaussian() {
        let params = LevyParams::new(2.0, 1.0).unwrap();
        let kernel = LevyKernel::new(params, Dispersion::Diffusive { diffusion: 1.0 }).unwrap();
        let t = 50.0;
        for &j in &[0i64, 5, 20] {
            let g = libm::exp(-((j * j) as f64) / (4.0 * t)) / libm::sqrt(4.0 * PI * t);
            assert!((kernel.solution(j, t).unwrap() - g).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_mean_field() {
        let params = LevyParams::new(0.4, 1.0).unwrap();
        assert!(LevyKernel::new(params, Dispersion::Lattice).is_err());
        assert!(fourier_solution(LevyParams::new(1.1, 1.0).unwrap(), 0, -1.0).is_err());
    }
}
