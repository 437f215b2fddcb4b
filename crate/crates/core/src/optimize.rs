//! Small dense minimizers used by the fitting routines.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Downhill simplex minimization of `f` from `x0`, with initial simplex
/// offsets `scale`. Non-finite values are treated as `+∞`.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], scale: &[f64], xtol: f64, max_iter: usize) -> (Vec<f64>, f64)
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut eval = |x: &[f64]| {
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += scale[i];
        simplex.push(x);
    }
    let mut values: Vec<f64> = simplex.iter().map(|x| eval(x)).collect();

    for _ in 0..max_iter {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread = simplex[1..]
            .iter()
            .flat_map(|x| x.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if spread <= xtol {
            break;
        }

        let centroid: Vec<f64> = (0..n)
            .map(|i| simplex[..n].iter().map(|x| x[i]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n])
                .map(|(c, w)| c + t * (w - c))
                .collect()
        };
        let xr = along(-1.0);
        let fr = eval(&xr);
        if fr < values[0] {
            let xe = along(-2.0);
            let fe = eval(&xe);
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
        } else if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
        } else {
            let (xc, fc) = if fr < values[n] {
                let x = along(-0.5);
                let v = eval(&x);
                (x, v)
            } else {
                let x = along(0.5);
                let v = eval(&x);
                (x, v)
            };
            if fc < values[n].min(fr) {
                simplex[n] = xc;
                values[n] = fc;
            } else {
                for k in 1..=n {
                    let x: Vec<f64> = simplex[0]
                        .iter()
                        .zip(&simplex[k])
                        .map(|(b, x)| b + 0.5 * (x - b))
                        .collect();
                    values[k] = eval(&x);
                    simplex[k] = x;
                }
            }
        }
    }
    let best = (0..=n).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap_or(0);
    (simplex[best].clone(), values[best])
}

/// Result of a nonlinear least-squares solve.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub params: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Jacobian of the residuals at `params`, one row per residual.
    pub jacobian: DMatrix<f64>,
    pub cost: f64,
    pub iterations: usize,
}

impl LeastSquares {
    /// `(JᵀJ)^{-1}`, or `None` when the normal matrix is singular.
    pub fn normal_inverse(&self) -> Option<DMatrix<f64>> {
        let jtj = self.jacobian.tr_mul(&self.jacobian);
        jtj.try_inverse()
    }
}

fn jacobian<F>(residual: &mut F, x: &[f64], r0: &[f64], steps: &[f64]) -> Option<DMatrix<f64>>
where
    F: FnMut(&[f64]) -> Option<Vec<f64>>,
{
    let m = r0.len();
    let n = x.len();
    let mut jac = DMatrix::zeros(m, n);
    for i in 0..n {
        let h = steps[i];
        let mut xp = x.to_vec();
        xp[i] += h;
        let mut xm = x.to_vec();
        xm[i] -= h;
        match (residual(&xp), residual(&xm)) {
            (Some(rp), Some(rm)) => {
                for k in 0..m {
                    jac[(k, i)] = (rp[k] - rm[k]) / (2.0 * h);
                }
            }
            (Some(rp), None) => {
                for k in 0..m {
                    jac[(k, i)] = (rp[k] - r0[k]) / h;
                }
            }
            (None, Some(rm)) => {
                for k in 0..m {
                    jac[(k, i)] = (r0[k] - rm[k]) / h;
                }
            }
            (None, None) => return None,
        }
    }
    Some(jac)
}

fn cost_of(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// Levenberg–Marquardt on `residual`, with central finite differences of
/// absolute step `steps[i]` for parameter `i`. A residual of `None` marks an
/// infeasible point and is rejected like an uphill step.
pub fn levenberg_marquardt<F>(
    mut residual: F,
    x0: &[f64],
    steps: &[f64],
    xtol: f64,
    max_iter: usize,
) -> Result<LeastSquares>
where
    F: FnMut(&[f64]) -> Option<Vec<f64>>,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut r = residual(&x).ok_or(Error::NonConvergence {
        what: "least squares (infeasible start)",
        iterations: 0,
        residual: f64::INFINITY,
    })?;
    let mut cost = cost_of(&r);
    let mut mu = 1e-3;
    let mut jac = jacobian(&mut residual, &x, &r, steps).ok_or(Error::NonConvergence {
        what: "least squares (Jacobian)",
        iterations: 0,
        residual: cost,
    })?;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < max_iter {
        iterations += 1;
        let jtj = jac.tr_mul(&jac);
        let g = jac.tr_mul(&DVector::from_column_slice(&r));
        let mut accepted = false;
        for _ in 0..60 {
            let mut a = jtj.clone();
            for i in 0..n {
                a[(i, i)] += mu * jtj[(i, i)].max(1e-300) + mu * 1e-12;
            }
            let delta = match a.lu().solve(&(-&g)) {
                Some(d) => d,
                None => {
                    mu *= 10.0;
                    continue;
                }
            };
            let trial: Vec<f64> = x.iter().zip(delta.iter()).map(|(a, d)| a + d).collect();
            if let Some(rt) = residual(&trial) {
                let ct = cost_of(&rt);
                if ct.is_finite() && ct <= cost {
                    let small = delta
                        .iter()
                        .zip(&x)
                        .all(|(d, p)| d.abs() <= xtol * (p.abs() + xtol));
                    let flat = cost - ct <= 1e-15 * cost.max(1e-300);
                    x = trial;
                    r = rt;
                    cost = ct;
                    mu = (mu * 0.3).max(1e-15);
                    accepted = true;
                    if small || flat {
                        converged = true;
                    }
                    break;
                }
            }
            mu *= 10.0;
            if mu > 1e20 {
                break;
            }
        }
        if let Some(j) = jacobian(&mut residual, &x, &r, steps) {
            jac = j;
        }
        if !accepted || converged {
            // no downhill step exists at any damping: a stationary point
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence {
            what: "least squares",
            iterations,
            residual: cost,
        });
    }
    Ok(LeastSquares {
        params: x,
        residuals: r,
        jacobian: jac,
        cost,
        iterations,
    })
}
