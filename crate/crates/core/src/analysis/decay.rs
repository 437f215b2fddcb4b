//! Uniform two-rate incoherent flip model.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::optimize::levenberg_marquardt;

/// Spontaneous decay `Γ` (up → down) and symmetric flip rate `γ`, both 1/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlipRates {
    pub gamma_decay: f64,
    pub gamma_flip: f64,
}

impl FlipRates {
    pub fn new(gamma_decay: f64, gamma_flip: f64) -> Result<Self> {
        if !(gamma_decay >= 0.0 && gamma_flip >= 0.0) || !gamma_decay.is_finite() || !gamma_flip.is_finite() {
            return Err(invalid("flip rates must be finite and non-negative"));
        }
        Ok(Self {
            gamma_decay,
            gamma_flip,
        })
    }

    /// Relaxation rate `Γ + 2γ`.
    pub fn relaxation_rate(&self) -> f64 {
        self.gamma_decay + 2.0 * self.gamma_flip
    }

    /// Stationary up-probability `γ / (Γ + 2γ)`; `None` when both rates vanish.
    pub fn stationary_up(&self) -> Option<f64> {
        let k = self.relaxation_rate();
        (k > 0.0).then(|| self.gamma_flip / k)
    }

    /// Applies the channel to a coherent `⟨σ^z⟩` at time `t`.
    pub fn damp_magnetization(&self, m: f64, t: f64) -> f64 {
        let p = 0.5 * (1.0 + m);
        2.0 * up_probability(self, p, t) - 1.0
    }
}

fn up_probability(rates: &FlipRates, p0: f64, t: f64) -> f64 {
    let k = rates.relaxation_rate();
    match rates.stationary_up() {
        Some(p_inf) => p_inf + (p0 - p_inf) * (-k * t).exp(),
        None => p0,
    }
}

/// Expected magnetization `2p(t) − 1` of a spin starting up with probability
/// `p0`, from `dp/dt = −(Γ + 2γ)p + γ`.
pub fn magnetization_decay(rates: &FlipRates, p0: f64, t: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p0) {
        return Err(invalid("initial probability must lie in [0, 1]"));
    }
    if !(t >= 0.0) {
        return Err(invalid("time must be non-negative"));
    }
    Ok(2.0 * up_probability(rates, p0, t) - 1.0)
}

/// One measured magnetization series with its known initial up-probability.
#[derive(Debug, Clone, PartialEq)]
pub struct MagnetizationSeries {
    pub p0: f64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlipRateFit {
    pub rates: FlipRates,
    /// Root-mean-square residual in magnetization.
    pub rms_residual: f64,
}

/// Joint least-squares fit of [`magnetization_decay`] to every series.
pub fn fit_flip_rates(series: &[MagnetizationSeries], times: &[f64]) -> Result<FlipRateFit> {
    let mut distinct: Vec<f64> = times.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(invalid("need at least two distinct times"));
    }
    if series.is_empty() {
        return Err(invalid("no magnetization series supplied"));
    }
    for s in series {
        if s.values.len() != times.len() {
            return Err(Error::DimensionMismatch {
                expected: times.len(),
                found: s.values.len(),
            });
        }
        if !(0.0..=1.0).contains(&s.p0) {
            return Err(invalid("initial probability must lie in [0, 1]"));
        }
    }
    let flat = series.iter().all(|s| {
        let m0 = 2.0 * s.p0 - 1.0;
        s.values.iter().all(|v| (v - m0).abs() < 1e-12)
    });
    if flat {
        return Err(Error::Unidentifiable(
            "magnetization does not change; rates cannot be separated".into(),
        ));
    }

    let residual = |p: &[f64]| -> Option<Vec<f64>> {
        if p[0] < 0.0 || p[1] < 0.0 {
            return None;
        }
        let r = FlipRates {
            gamma_decay: p[0],
            gamma_flip: p[1],
        };
        Some(
            series
                .iter()
                .flat_map(|s| {
                    times
                        .iter()
                        .zip(&s.values)
                        .map(move |(&t, &m)| 2.0 * up_probability(&r, s.p0, t) - 1.0 - m)
                })
                .collect(),
        )
    };
    let cost = |p: &[f64]| residual(p).map_or(f64::INFINITY, |r| r.iter().map(|v| v * v).sum());

    // coarse log grid for a start, then LM
    let span = distinct[distinct.len() - 1] - distinct[0];
    let base = 1.0 / span;
    let mut best = ([base, base], f64::INFINITY);
    for a in -4..=4 {
        for b in -4..=4 {
            let p = [base * 3f64.powi(a), base * 3f64.powi(b)];
            let c = cost(&p);
            if c < best.1 {
                best = (p, c);
            }
        }
    }
    let start = best.0;
    let steps = [1e-7 * start[0].max(base), 1e-7 * start[1].max(base)];
    let fit = levenberg_marquardt(residual, &start, &steps, 1e-12, 500)?;
    let rates = FlipRates::new(fit.params[0], fit.params[1])?;
    Ok(FlipRateFit {
        rates,
        rms_residual: (fit.cost / fit.residuals.len() as f64).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn closed_form_limits() {
        let none = FlipRates::new(0.0, 0.0).unwrap();
        assert_eq!(magnetization_decay(&none, 0.3, 5.0).unwrap(), -0.4);
        let pure = FlipRates::new(0.7, 0.0).unwrap();
        let m = magnetization_decay(&pure, 1.0, 2.0).unwrap();
        assert!(((m + 1.0) / 2.0 - (-1.4f64).exp()).abs() < 1e-15);
        let fitted = FlipRates::new(0.91, 0.78).unwrap();
        assert!((fitted.stationary_up().unwrap() - 0.78 / 2.47).abs() < 1e-15);
    }

    #[test]
    fn early_slope_from_all_down() {
        let r = FlipRates::new(0.91, 0.78).unwrap();
        let h = 1e-6;
        let slope = (magnetization_decay(&r, 0.0, h).unwrap() - magnetization_decay(&r, 0.0, 0.0).unwrap()) / h;
        assert!((slope - 2.0 * 0.78).abs() < 1e-5);
    }

    #[test]
    fn rejects_bad_input() {
        let r = FlipRates::new(1.0, 1.0).unwrap();
        assert!(magnetization_decay(&r, 1.5, 0.0).is_err());
        assert!(FlipRates::new(-1.0, 0.0).is_err());
        let s = [MagnetizationSeries {
            p0: 1.0,
            values: vec![1.0, 1.0],
        }];
        assert!(matches!(fit_flip_rates(&s, &[0.0, 1.0]), Err(Error::Unidentifiable(_))));
        assert!(fit_flip_rates(&s, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn recovers_noiseless_rates() {
        let truth = FlipRates::new(0.91, 0.78).unwrap();
        let times: Vec<f64> = (0..41).map(|k| k as f64 * 0.05).collect();
        let series: Vec<MagnetizationSeries> = [0.0, 0.5, 1.0]
            .iter()
            .map(|&p0| MagnetizationSeries {
                p0,
                values: times.iter().map(|&t| magnetization_decay(&truth, p0, t).unwrap()).collect(),
            })
            .collect();
        let fit = fit_flip_rates(&series, &times).unwrap();
        assert!((fit.rates.gamma_decay - 0.91).abs() < 1e-6);
        assert!((fit.rates.gamma_flip - 0.78).abs() < 1e-6);
    }
}
