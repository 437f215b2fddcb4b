use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{domain, Error, Result};
use crate::field::CorrelationField;
use crate::hydro::{classify_regime, scaling_exponent, StableDistribution};
use crate::optimize::{levenberg_marquardt, nelder_mead};

/// Transport coefficients `D_α/J` reported for the experiment at
/// `α = 0.9, 1.1, 1.5`. Kept as regression targets for reports; they are not
/// reproduced by any simulation here.
pub const EXPERIMENTAL_D_OVER_J: [(f64, f64); 3] = [(0.9, 0.5), (1.1, 0.8), (1.5, 2.6)];

/// Selection of field points entering a collapse fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitWindow {
    /// Points with `t > t_min` ...
    pub t_min: f64,
    /// ... and `t ≤ t_max` are used.
    pub t_max: f64,
    /// Optional bound on `|j|`.
    pub max_offset: Option<i64>,
    /// Number of outermost sites dropped at each end of the chain.
    pub edge_exclusion: usize,
}

impl Default for FitWindow {
    fn default() -> Self {
        Self {
            t_min: 0.0,
            t_max: f64::INFINITY,
            max_offset: None,
            edge_exclusion: 2,
        }
    }
}

impl FitWindow {
    /// `J t > 5`, outermost two sites excluded.
    pub fn for_coupling(j_nominal: f64) -> Self {
        Self {
            t_min: 5.0 / j_nominal.abs(),
            ..Self::default()
        }
    }
}

/// Result of [`collapse_fit`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFit {
    pub alpha: f64,
    /// `D_α`, in sites^{2α−1} per unit of the field's time axis.
    pub diffusion: f64,
    pub beta: f64,
    pub beta_fixed: bool,
    /// Row-major covariance of `(D)` or `(D, β)`.
    pub covariance: Vec<f64>,
    pub reduced_chi2: f64,
    pub n_points: usize,
    /// Smallest and largest time actually used.
    pub time_range: (f64, f64),
    /// Smallest and largest site offset actually used.
    pub site_range: (i64, i64),
}

impl ScalingFit {
    pub fn d_over_j(&self, j_nominal: f64) -> f64 {
        self.diffusion / j_nominal
    }

    pub fn diffusion_stderr(&self) -> f64 {
        libm::sqrt(self.covariance[0].max(0.0))
    }

    /// Standard error of `β`; zero when it was pinned.
    pub fn beta_stderr(&self) -> f64 {
        if self.beta_fixed {
            0.0
        } else {
            libm::sqrt(self.covariance[3].max(0.0))
        }
    }
}

struct Point {
    t: f64,
    j: f64,
    c: f64,
    w: f64,
}

/// Points inside the window with the time and site ranges they span.
type Selection = (Vec<Point>, (f64, f64), (i64, i64));

fn select(field: &CorrelationField, window: &FitWindow) -> Result<Selection> {
    let mut offsets: Vec<i64> = field.sites().to_vec();
    offsets.sort_unstable();
    let e = window.edge_exclusion;
    if offsets.len() <= 2 * e {
        return Err(Error::DegenerateWindow("edge exclusion removes every site".into()));
    }
    let (lo, hi) = (offsets[e], offsets[offsets.len() - 1 - e]);
    let weighted = field.has_sigmas();
    let mut pts = Vec::new();
    let mut trange = (f64::INFINITY, f64::NEG_INFINITY);
    let mut srange = (i64::MAX, i64::MIN);
    for (ti, &t) in field.times().iter().enumerate() {
        if !(t > window.t_min && t <= window.t_max) {
            continue;
        }
        for (si, &j) in field.sites().iter().enumerate() {
            if j < lo || j > hi || window.max_offset.is_some_and(|m| j.abs() > m) {
                continue;
            }
            let w = if weighted { 1.0 / field.sigma(ti, si) } else { 1.0 };
            pts.push(Point {
                t,
                j: j as f64,
                c: field.value(ti, si),
                w,
            });
            trange = (trange.0.min(t), trange.1.max(t));
            srange = (srange.0.min(j), srange.1.max(j));
        }
    }
    Ok((pts, trange, srange))
}

/// Least-squares fit of the scaling form `(D t)^{−β} F_α(|j|/(D t)^β)` to
/// `field` inside `window`.
///
/// `F_α` is the stable density for `α < 3/2` and the Gaussian above, where
/// `β` defaults to `1/2`. Weights are `1/σ` when every sigma is positive and
/// unity otherwise; with unit weights the covariance is rescaled by the
/// reduced χ².
pub fn collapse_fit(field: &CorrelationField, alpha: f64, window: &FitWindow, beta_fixed: bool) -> Result<ScalingFit> {
    let regime = classify_regime(alpha)?;
    if !regime.is_transporting() {
        return Err(domain("collapse fits need a transporting regime (alpha > 1/2)"));
    }
    let beta0 = scaling_exponent(alpha)?;
    let dist = StableDistribution::tabulated(alpha.min(1.5))?;
    let (pts, time_range, site_range) = select(field, window)?;
    let n_par = if beta_fixed { 1 } else { 2 };
    if pts.len() <= n_par {
        return Err(Error::DegenerateWindow("fewer points than parameters".into()));
    }
    let weighted = field.has_sigmas();

    let residuals = |p: &[f64]| -> Option<Vec<f64>> {
        let d = libm::exp(p[0]);
        let beta = if beta_fixed { beta0 } else { p[1] };
        if !d.is_finite() || !(beta > 0.0) {
            return None;
        }
        Some(
            pts.iter()
                .map(|q| {
                    let width = libm::pow(d * q.t, beta);
                    (q.c - dist.density(q.j.abs() / width) / width) * q.w
                })
                .collect(),
        )
    };
    let cost = |p: &[f64]| residuals(p).map_or(f64::INFINITY, |r| r.iter().map(|v| v * v).sum());

    // start from the peak heights: C_0(t) ≈ (D t)^{−β} F(0)
    let mut guesses: Vec<f64> = pts
        .iter()
        .filter(|q| q.j == 0.0 && q.c > 0.0)
        .map(|q| libm::log(libm::pow(dist.peak() / q.c, 1.0 / beta0) / q.t))
        .collect();
    guesses.sort_by(f64::total_cmp);
    let ln_d0 = guesses.get(guesses.len() / 2).copied().unwrap_or(0.0);
    let (x0, scale) = if beta_fixed {
        (vec![ln_d0], vec![0.5])
    } else {
        (vec![ln_d0, beta0], vec![0.5, 0.05])
    };
    let (xs, _) = nelder_mead(cost, &x0, &scale, 1e-10, 4000);
    let ls = levenberg_marquardt(residuals, &xs, &vec![1e-5; n_par], 1e-10, 200)?;

    let dof = (pts.len() - n_par) as f64;
    let reduced_chi2 = ls.cost / dof;
    let inv = ls.normal_inverse().ok_or_else(|| Error::Unidentifiable("singular collapse-fit curvature".into()))?;
    let scale_cov = if weighted { 1.0 } else { reduced_chi2 };
    let d = libm::exp(ls.params[0]);
    // map (ln D, β) to (D, β)
    let jac = [d, 1.0];
    let mut covariance = vec![0.0; n_par * n_par];
    for a in 0..n_par {
        for b in 0..n_par {
            covariance[a * n_par + b] = inv[(a, b)] * jac[a] * jac[b] * scale_cov;
        }
    }
    Ok(ScalingFit {
        alpha,
        diffusion: d,
        beta: if beta_fixed { beta0 } else { ls.params[1] },
        beta_fixed,
        covariance,
        reduced_chi2,
        n_points: pts.len(),
        time_range,
        site_range,
    })
}
