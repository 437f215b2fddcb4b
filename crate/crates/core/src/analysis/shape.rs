use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::field::CorrelationField;
use crate::optimize::{levenberg_marquardt, nelder_mead};

/// Reduced χ² of the normalized Lorentzian and Gaussian fits to one profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeChi2 {
    pub lorentzian: f64,
    pub gaussian: f64,
    /// Fitted `(a, w)` of `a w / (π (w² + j²))`.
    pub lorentzian_params: (f64, f64),
    /// Fitted `(a, s)` of `a exp(−j²/2s²) / (s √(2π))`.
    pub gaussian_params: (f64, f64),
    pub n_points: usize,
}

#[derive(Clone, Copy)]
enum Model {
    Lorentzian,
    Gaussian,
}

impl Model {
    fn eval(self, a: f64, w: f64, j: f64) -> f64 {
        match self {
            Model::Lorentzian => a * w / (PI * (w * w + j * j)),
            Model::Gaussian => a * libm::exp(-j * j / (2.0 * w * w)) / (w * libm::sqrt(2.0 * PI)),
        }
    }

    fn peak_width(self, a: f64, c0: f64) -> f64 {
        match self {
            Model::Lorentzian => a / (PI * c0),
            Model::Gaussian => a / (libm::sqrt(2.0 * PI) * c0),
        }
    }
}

fn fit(model: Model, pts: &[(f64, f64, f64)]) -> Result<(f64, f64, f64)> {
    let residuals = |p: &[f64]| -> Option<Vec<f64>> {
        let w = libm::exp(p[1]);
        w.is_finite()
            .then(|| pts.iter().map(|&(j, c, s)| (c - model.eval(p[0], w, j)) / s).collect())
    };
    let cost = |p: &[f64]| residuals(p).map_or(f64::INFINITY, |r| r.iter().map(|v| v * v).sum());
    let a0 = pts.iter().map(|p| p.1).sum::<f64>().max(1e-12);
    let c0 = pts
        .iter()
        .min_by(|x, y| x.0.abs().total_cmp(&y.0.abs()))
        .map_or(a0, |p| p.1)
        .max(1e-12);
    let x0 = [a0, libm::log(model.peak_width(a0, c0).max(1e-3))];
    let (xs, _) = nelder_mead(cost, &x0, &[0.1 * a0, 0.3], 1e-10, 4000);
    let ls = levenberg_marquardt(residuals, &xs, &[1e-6 * a0, 1e-6], 1e-10, 200)?;
    let dof = (pts.len() - 2) as f64;
    Ok((ls.cost / dof, ls.params[0], libm::exp(ls.params[1])))
}

/// Fits both shapes to `(sites, values, sigmas)`, weighted by `1/σ²`.
///
/// With `central = Some(n)` only the `n` sites closest to the origin are used.
pub fn shape_chi2(sites: &[i64], values: &[f64], sigmas: &[f64], central: Option<usize>) -> Result<ShapeChi2> {
    if values.len() != sites.len() || sigmas.len() != sites.len() {
        return Err(Error::DimensionMismatch {
            expected: sites.len(),
            found: if values.len() != sites.len() {
                values.len()
            } else {
                sigmas.len()
            },
        });
    }
    if sigmas.iter().any(|s| !(*s > 0.0)) {
        return Err(invalid("shape fits need positive sigmas"));
    }
    let mut order: Vec<usize> = (0..sites.len()).collect();
    order.sort_by_key(|&i| (sites[i].abs(), sites[i]));
    if let Some(n) = central {
        order.truncate(n);
    }
    if order.len() <= 2 {
        return Err(Error::DegenerateWindow("shape fits need more than two sites".into()));
    }
    let pts: Vec<(f64, f64, f64)> = order.iter().map(|&i| (sites[i] as f64, values[i], sigmas[i])).collect();
    let (lorentzian, la, lw) = fit(Model::Lorentzian, &pts)?;
    let (gaussian, ga, gs) = fit(Model::Gaussian, &pts)?;
    Ok(ShapeChi2 {
        lorentzian,
        gaussian,
        lorentzian_params: (la, lw),
        gaussian_params: (ga, gs),
        n_points: pts.len(),
    })
}

/// [`shape_chi2`] on one time slice of a field.
pub fn shape_chi2_at(field: &CorrelationField, time_index: usize, central: Option<usize>) -> Result<ShapeChi2> {
    shape_chi2(
        field.sites(),
        field.profile(time_index),
        field.profile_sigmas(time_index),
        central,
    )
}
