//! Symmetric stable densities `F_α(y) = ∫ dk/2π e^{iyk − |k|^{2α−1}}`.

use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{domain, invalid, Result};
use crate::quad::{graded_breakpoints, GaussLegendre};

const GL_ORDER: usize = 20;
/// Table grid in `u = asinh(y)`.
const TABLE_STEP: f64 = 0.0025;
const TABLE_END: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Shape {
    Lorentzian,
    Gaussian,
    General,
}

/// Evaluator for `F_α` with `1/2 < α ≤ 3/2`.
///
/// Away from the closed forms at `α = 1` and `α = 3/2` the integral is taken
/// along the ray `k = r e^{iθ}`, `θ < π/(2γ)`, `γ = 2α − 1`, where the
/// integrand decays exponentially instead of oscillating. The nodes and
/// weights of that ray are cached; [`StableDistribution::tabulated`] adds an
/// interpolation table for repeated evaluation.
#[derive(Debug, Clone)]
pub struct StableDistribution {
    alpha: f64,
    gamma: f64,
    shape: Shape,
    /// `w_n e^{iθ} exp(−r_n^γ e^{iγθ})` per node.
    coefficients: Vec<Complex64>,
    /// `i r_n e^{iθ}` per node.
    exponents: Vec<Complex64>,
    table: Option<Vec<f64>>,
}

impl StableDistribution {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.5 && alpha <= 1.5) {
            return Err(domain("stable densities are defined for 0.5 < alpha <= 1.5"));
        }
        let gamma = 2.0 * alpha - 1.0;
        let shape = if alpha == 1.0 {
            Shape::Lorentzian
        } else if alpha == 1.5 {
            Shape::Gaussian
        } else {
            Shape::General
        };
        let theta = (PI / (4.0 * gamma)).min(PI / 2.0);
        let direction = Complex64::from_polar(1.0, theta);
        let rotated = Complex64::from_polar(1.0, gamma * theta);
        let r_max = libm::pow(45.0 / rotated.re, 1.0 / gamma);
        let rule = GaussLegendre::new(GL_ORDER);
        let mut coefficients = Vec::new();
        let mut exponents = Vec::new();
        if shape == Shape::General {
            let pts = graded_breakpoints(r_max, 48, 0.5);
            let max_width = r_max / 32.0;
            for w in pts.windows(2) {
                let pieces = ((w[1] - w[0]) / max_width).ceil().max(1.0) as usize;
                let h = (w[1] - w[0]) / pieces as f64;
                for p in 0..pieces {
                    let a = w[0] + p as f64 * h;
                    for (r, wt) in rule.mapped(a, a + h) {
                        let decay = (-(rotated * libm::pow(r, gamma))).exp();
                        coefficients.push(direction * decay * wt);
                        exponents.push(Complex64::new(0.0, r) * direction);
                    }
                }
            }
        }
        Ok(Self {
            alpha,
            gamma,
            shape,
            coefficients,
            exponents,
            table: None,
        })
    }

    /// As [`new`](Self::new), plus a cubic interpolation table on
    /// `asinh(y) ∈ [0, 10]`; beyond it the large-`y` series is used.
    pub fn tabulated(alpha: f64) -> Result<Self> {
        let mut dist = Self::new(alpha)?;
        if dist.shape == Shape::General {
            let n = (TABLE_END / TABLE_STEP).round() as usize + 3;
            let table = (0..n)
                .map(|i| dist.integrate(libm::sinh((i as f64 - 1.0) * TABLE_STEP).abs()))
                .collect();
            dist.table = Some(table);
        }
        Ok(dist)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Characteristic exponent `γ = 2α − 1`.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn density(&self, y: f64) -> f64 {
        let y = y.abs();
        match self.shape {
            Shape::Lorentzian => 1.0 / (PI * (1.0 + y * y)),
            Shape::Gaussian => libm::exp(-y * y / 4.0) / libm::sqrt(4.0 * PI),
            Shape::General => match &self.table {
                Some(table) => {
                    let u = libm::asinh(y);
                    if u >= TABLE_END - TABLE_STEP {
                        return self.tail_series(y).unwrap_or_else(|| self.integrate(y));
                    }
                    // entry m + 1 holds u = m·step; four-point stencil around u
                    let s = u / TABLE_STEP;
                    let m = s.floor() as usize;
                    let x = s - m as f64;
                    lagrange4(&table[m..m + 4], x)
                }
                None => self.integrate(y),
            },
        }
    }

    /// Direct quadrature along the rotated ray.
    fn integrate(&self, y: f64) -> f64 {
        let s: Complex64 = self
            .coefficients
            .iter()
            .zip(&self.exponents)
            .map(|(c, e)| c * (e * y).exp())
            .sum();
        s.re / PI
    }

    /// Large-`y` series `(1/π) Σ (−1)^{n+1} Γ(nγ+1)/n! sin(nπγ/2) y^{−nγ−1}`,
    /// if it has converged to double precision.
    fn tail_series(&self, y: f64) -> Option<f64> {
        self.series(y, |n| libm::pow(y, -(n * self.gamma + 1.0)))
    }

    fn series<F: Fn(f64) -> f64>(&self, y: f64, power: F) -> Option<f64> {
        if y <= 0.0 {
            return None;
        }
        let mut sum = 0.0;
        let mut fact = 1.0;
        let mut last_bound = f64::INFINITY;
        for n in 1..60 {
            let nf = n as f64;
            fact *= nf;
            // the sine factor can vanish, so convergence is judged on the bound
            let bound = libm::tgamma(nf * self.gamma + 1.0) / fact * power(nf);
            if !bound.is_finite() || (bound > last_bound && n > 2) {
                return None;
            }
            let term = bound * libm::sin(nf * PI * self.gamma / 2.0);
            sum += if n % 2 == 1 { term } else { -term };
            if n > 1 && bound <= 1e-17 * sum.abs() {
                return Some(sum / PI);
            }
            last_bound = bound;
        }
        None
    }

    /// `∫_{y0}^∞ F_α(y) dy` from the large-`y` series; requires `y0` large
    /// enough for the series to converge (roughly `y0 ≳ 20`).
    pub fn tail_mass(&self, y0: f64) -> Result<f64> {
        if !(y0 > 0.0) {
            return Err(invalid("tail start must be positive"));
        }
        match self.shape {
            Shape::Lorentzian => Ok(0.5 - libm::atan(y0) / PI),
            Shape::Gaussian => Ok(0.5 * libm::erfc(y0 / 2.0)),
            Shape::General => self
                .series(y0, |n| libm::pow(y0, -n * self.gamma) / (n * self.gamma))
                .ok_or_else(|| domain("tail series does not converge at this y0")),
        }
    }

    /// Exact value at the origin, `Γ(1 + 1/γ)/π`.
    pub fn peak(&self) -> f64 {
        libm::tgamma(1.0 + 1.0 / self.gamma) / PI
    }
}

fn lagrange4(p: &[f64], x: f64) -> f64 {
    // nodes at -1, 0, 1, 2 relative to p[1]
    let (a, b, c, d) = (p[0], p[1], p[2], p[3]);
    let xm1 = x + 1.0;
    let x1 = x - 1.0;
    let x2 = x - 2.0;
    -a * x * x1 * x2 / 6.0 + b * xm1 * x1 * x2 / 2.0 - c * xm1 * x * x2 / 2.0 + d * xm1 * x * x1 / 6.0
}

/// One-shot evaluation of `F_α(y)`.
pub fn stable_density(alpha: f64, y: f64) -> Result<f64> {
    Ok(StableDistribution::new(alpha)?.density(y))
}

/// Gaussian profile `exp(−j²/(4Dt)) / sqrt(4πDt)`.
pub fn diffusive_profile(diffusion: f64, j: f64, t: f64) -> Result<f64> {
    if !(diffusion > 0.0) || !(t > 0.0) {
        return Err(invalid("diffusion constant and time must be positive"));
    }
    let s = 4.0 * diffusion * t;
    Ok(libm::exp(-j * j / s) / libm::sqrt(PI * s))
}

/// Scaling form `(D t)^{−β} F(|j| / (D t)^β)`.
pub fn scaling_profile(dist: &StableDistribution, diffusion: f64, beta: f64, j: f64, t: f64) -> f64 {
    let width = libm::pow(diffusion * t, beta);
    dist.density(j.abs() / width) / width
}
