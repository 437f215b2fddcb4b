//! Lattice master equation `∂_t f_i = Σ_j W_ij (f_j − f_i)` on an open chain.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use super::LevyParams;
use crate::error::{invalid, Error, Result};

/// Symmetric non-negative jump rates with zero diagonal, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RateMatrix {
    size: usize,
    entries: Vec<f64>,
}

impl RateMatrix {
    pub fn from_entries(size: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != size * size {
            return Err(Error::DimensionMismatch {
                expected: size * size,
                found: entries.len(),
            });
        }
        for i in 0..size {
            if entries[i * size + i] != 0.0 {
                return Err(invalid("rate matrix diagonal must vanish"));
            }
            for j in 0..i {
                let (a, b) = (entries[i * size + j], entries[j * size + i]);
                if !(a >= 0.0) || !a.is_finite() || a != b {
                    return Err(invalid("rates must be finite, non-negative and symmetric"));
                }
            }
        }
        Ok(Self { size, entries })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.size + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.size..(i + 1) * self.size]
    }

    /// Largest total escape rate `max_i Σ_j W_ij`.
    pub fn max_escape_rate(&self) -> f64 {
        (0..self.size)
            .map(|i| self.row(i).iter().sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `df_i = Σ_j W_ij (f_j − f_i)`, summed pairwise so a uniform `f` is
    /// mapped to exactly zero.
    pub fn apply_generator(&self, f: &[f64], df: &mut [f64]) {
        for (i, d) in df.iter_mut().enumerate() {
            let fi = f[i];
            *d = self.row(i).iter().zip(f).map(|(w, fj)| w * (fj - fi)).sum();
        }
    }
}

/// Golden-rule rates `W_ij = λ / |i − j|^{2α}`.
pub fn golden_rule_rates(params: LevyParams, length: usize) -> Result<RateMatrix> {
    if length < 2 {
        return Err(invalid("chain length must be at least 2"));
    }
    let by_distance: Vec<f64> = (0..length)
        .map(|d| {
            if d == 0 {
                0.0
            } else {
                params.lambda / libm::pow(d as f64, 2.0 * params.alpha)
            }
        })
        .collect();
    let mut entries = vec![0.0; length * length];
    for i in 0..length {
        for j in 0..length {
            entries[i * length + j] = by_distance[i.abs_diff(j)];
        }
    }
    Ok(RateMatrix {
        size: length,
        entries,
    })
}

/// Tolerances of the Dormand–Prince 5(4) integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MasterEquationOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
}

impl Default for MasterEquationOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-13,
            max_steps: 1_000_000,
        }
    }
}

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order minus fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates the master equation from `f0` at `t = 0`, returning `f` at
/// each of `times` (non-decreasing, non-negative).
pub fn evolve_master_equation(
    rates: &RateMatrix,
    f0: &[f64],
    times: &[f64],
    options: MasterEquationOptions,
) -> Result<Vec<Vec<f64>>> {
    let n = rates.size();
    if f0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: f0.len(),
        });
    }
    if f0.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(invalid("initial probabilities must be finite and non-negative"));
    }
    let total: f64 = f0.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(invalid("initial probabilities must sum to one"));
    }
    if times.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(invalid("times must be finite, non-negative and non-decreasing"));
    }

    let mut y = f0.to_vec();
    let mut t = 0.0;
    let escape = rates.max_escape_rate();
    let mut h = if escape > 0.0 { 0.1 / escape } else { f64::INFINITY };
    let mut k: Vec<Vec<f64>> = (0..7).map(|_| vec![0.0; n]).collect();
    let mut stage = vec![0.0; n];
    let mut out = Vec::with_capacity(times.len());
    let mut steps = 0usize;
    rates.apply_generator(&y, &mut k[0]);

    for &target in times {
        while t < target {
            if steps >= options.max_steps {
                return Err(Error::Stiffness { time: t, step: h });
            }
            let last = h >= target - t;
            let step = if last { target - t } else { h };
            for s in 1..7 {
                for i in 0..n {
                    let mut acc = y[i];
                    for (r, kr) in k.iter().enumerate().take(s) {
                        acc += step * A[s][r] * kr[i];
                    }
                    stage[i] = acc;
                }
                rates.apply_generator(&stage, &mut k[s]);
            }
            // stage now holds the fifth-order solution (FSAL row)
            let mut err: f64 = 0.0;
            for i in 0..n {
                let e: f64 = (0..7).map(|s| E[s] * k[s][i]).sum::<f64>() * step;
                let scale = options.abs_tol + options.rel_tol * y[i].abs().max(stage[i].abs());
                err = err.max(e.abs() / scale);
            }
            steps += 1;
            if err <= 1.0 {
                t = if last { target } else { t + step };
                y.copy_from_slice(&stage);
                k.swap(0, 6);
                let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                if !last || grow < 1.0 {
                    h = step * grow;
                }
            } else {
                h = step * (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
                if h < 1e-14 * t.max(1.0) {
                    return Err(Error::Stiffness { time: t, step: h });
                }
            }
        }
        out.push(y.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(alpha: f64, lambda: f64) -> LevyParams {
        LevyParams::new(alpha, lambda).unwrap()
    }

    #[test]
    fn rate_entries() {
        let w = golden_rule_rates(params(1.0, 1.0), 5).unwrap();
        assert_eq!(w.get(0, 2), 0.25);
        assert_eq!(w.get(3, 1), w.get(1, 3));
        let w2 = golden_rule_rates(params(1.0, 2.0), 5).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(w2.get(i, j), 2.0 * w.get(i, j));
            }
        }
        assert!(golden_rule_rates(params(1.0, 1.0), 1).is_err());
    }

    #[test]
    fn two_state_closed_form() {
        let w = golden_rule_rates(params(1.3, 0.7), 2).unwrap();
        let times = [0.1, 1.0, 4.0];
        let f = evolve_master_equation(&w, &[0.9, 0.1], &times, Default::default()).unwrap();
        for (row, &t) in f.iter().zip(&times) {
            let expect = 0.5 + 0.4 * (-2.0 * 0.7 * t).exp();
            assert!((row[0] - expect).abs() < 1e-9);
        }
    }

    #[test]
    fn uniform_is_fixed_and_total_conserved() {
        let w = golden_rule_rates(params(1.1, 1.0), 31).unwrap();
        let uniform = vec![1.0 / 31.0; 31];
        let f = evolve_master_equation(&w, &uniform, &[0.5, 10.0], Default::default()).unwrap();
        for row in &f {
            for (a, b) in row.iter().zip(&uniform) {
                assert!((a - b).abs() <= 1e-12);
            }
        }
        let mut delta = vec![0.0; 31];
        delta[15] = 1.0;
        let f = evolve_master_equation(&w, &delta, &[0.3, 3.0, 30.0], Default::default()).unwrap();
        for row in &f {
            assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            assert!(row.iter().all(|&v| v > -1e-12));
        }
        // mirror symmetry about the center
        for j in 0..15 {
            assert!((f[2][j] - f[2][30 - j]).abs() < 1e-12);
        }
    }

    #[test]
    fn step_limit_reports_stiffness() {
        let w = golden_rule_rates(params(1.0, 1.0), 8).unwrap();
        let mut f0 = vec![0.0; 8];
        f0[0] = 1.0;
        let opts = MasterEquationOptions {
            max_steps: 3,
            ..Default::default()
        };
        assert!(matches!(
            evolve_master_equation(&w, &f0, &[100.0], opts),
            Err(Error::Stiffness { .. })
        ));
        assert!(evolve_master_equation(&w, &[0.5; 8], &[1.0], Default::default()).is_err());
    }
}
