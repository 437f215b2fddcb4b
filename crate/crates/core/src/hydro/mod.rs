//! Classical Lévy-flight hydrodynamics of the spin excitation density.

mod lattice;
mod master;
mod stable;

use core::f64::consts::PI;

use crate::error::{domain, invalid, Result};

pub use lattice::{fourier_profile, fourier_solution, fourier_solution_with, lattice_rate, Dispersion, LevyKernel};
pub use master::{evolve_master_equation, golden_rule_rates, MasterEquationOptions, RateMatrix};
pub use stable::{diffusive_profile, scaling_profile, stable_density, StableDistribution};

/// Exponent `α` and rate scale `λ` (1/s) of the classical jump process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevyParams {
    pub alpha: f64,
    pub lambda: f64,
}

impl LevyParams {
    pub fn new(alpha: f64, lambda: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(invalid("alpha must be positive"));
        }
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(invalid("lambda must be positive"));
        }
        Ok(Self { alpha, lambda })
    }
}

/// Dynamical phase of the chain as a function of `α`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegimeClass {
    /// `α < 1/2`: no hydrodynamic limit.
    MeanField,
    /// Exactly `α = 1/2`.
    MeanFieldBoundary,
    /// `1/2 < α < 3/2`: Lévy flights with stable profiles.
    Superdiffusive,
    /// Exactly `α = 3/2`: diffusive scaling with a Gaussian profile.
    DiffusiveBoundary,
    /// `α > 3/2`.
    Diffusive,
}

impl RegimeClass {
    pub fn is_transporting(self) -> bool {
        !matches!(self, Self::MeanField | Self::MeanFieldBoundary)
    }
}

pub fn classify_regime(alpha: f64) -> Result<RegimeClass> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(invalid("alpha must be positive"));
    }
    Ok(if alpha < 0.5 {
        RegimeClass::MeanField
    } else if alpha == 0.5 {
        RegimeClass::MeanFieldBoundary
    } else if alpha < 1.5 {
        RegimeClass::Superdiffusive
    } else if alpha == 1.5 {
        RegimeClass::DiffusiveBoundary
    } else {
        RegimeClass::Diffusive
    })
}

/// Scaling exponent and transport coefficient of the continuum theory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictedScaling {
    pub regime: RegimeClass,
    pub beta: f64,
    /// `λ c_α` or `λ/(2α − 3)`; `None` at `α = 3/2`, where both diverge.
    pub diffusion: Option<f64>,
}

/// Profile exponent for `α`: `1/(2α − 1)` below `3/2`, `1/2` from there on.
pub fn scaling_exponent(alpha: f64) -> Result<f64> {
    let regime = classify_regime(alpha)?;
    if !regime.is_transporting() {
        return Err(domain("no scaling exponent in the mean-field regime"));
    }
    Ok(if alpha < 1.5 { 1.0 / (2.0 * alpha - 1.0) } else { 0.5 })
}

pub fn predicted_scaling(params: LevyParams) -> Result<PredictedScaling> {
    let regime = classify_regime(params.alpha)?;
    let beta = scaling_exponent(params.alpha)?;
    let diffusion = match regime {
        RegimeClass::Superdiffusive => Some(params.lambda * c_alpha(params.alpha)?),
        RegimeClass::Diffusive => Some(params.lambda / (2.0 * params.alpha - 3.0)),
        _ => None,
    };
    Ok(PredictedScaling {
        regime,
        beta,
        diffusion,
    })
}

/// `−π / (cos(απ) Γ(2α))`, the reflection-formula form of
/// `−2 Γ(1 − 2α) sin(απ)`, valid wherever `cos(απ) ≠ 0`.
fn reflection_coefficient(alpha: f64) -> f64 {
    -PI / (libm::cos(alpha * PI) * libm::tgamma(2.0 * alpha))
}

/// Coefficient of `|k|^{2α−1}` in the small-`k` rate, for `1/2 < α < 3/2`.
pub fn c_alpha(alpha: f64) -> Result<f64> {
    if !(alpha > 0.5 && alpha < 1.5) {
        return Err(domain("c_alpha is defined for 0.5 < alpha < 1.5"));
    }
    Ok(reflection_coefficient(alpha))
}

/// Small-`k` form of the rate, `(−c_α |k|^{2α−1} + k²/(3 − 2α)) λ`.
///
/// This is the continuum expansion; it is not a valid dispersion up to the
/// zone edge for every `α` (for `α = 1.1` it turns positive near `|k| = π`).
/// [`lattice_rate`] gives the exact lattice sum.
pub fn fourier_rate(alpha: f64, lambda: f64, k: f64) -> Result<f64> {
    if !(alpha > 0.5) {
        return Err(domain("rates diverge at small k for alpha <= 0.5"));
    }
    if !(k.abs() <= PI) {
        return Err(invalid("k must lie in the first Brillouin zone"));
    }
    if !(lambda > 0.0) {
        return Err(invalid("lambda must be positive"));
    }
    let cos = libm::cos(alpha * PI);
    if alpha == 1.5 || cos.abs() < 1e-15 {
        return Err(domain("the k^2 coefficient has a pole at alpha = 1.5; use the diffusive branch"));
    }
    if k == 0.0 {
        return Ok(0.0);
    }
    let c = reflection_coefficient(alpha);
    let a = k.abs();
    Ok((-c * libm::pow(a, 2.0 * alpha - 1.0) + a * a / (3.0 - 2.0 * alpha)) * lambda)
}
