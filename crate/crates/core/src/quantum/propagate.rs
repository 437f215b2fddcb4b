//! Real-time propagation `exp(-iHt)|ψ⟩` in one magnetization sector.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use super::basis::SectorBasis;
use super::hamiltonian::{apply_hamiltonian_rows, dense_hamiltonian};
use super::state::{inner, norm, QuantumState};
use crate::coupling::CouplingMatrix;
use crate::error::{invalid, Error, Result};
use crate::linalg::{symmetric_eigen, SymmetricEigen};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Full diagonalization of the sector Hamiltonian.
    DenseEigen,
    /// Lanczos projection onto a small Krylov space with adaptive steps.
    Krylov,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionEngine {
    pub method: Method,
    pub krylov_dim: usize,
    /// Bound on the accumulated vector-norm error of one `evolve` call.
    pub step_tolerance: f64,
    /// Largest sector dimension the dense method accepts.
    pub dense_cap: usize,
}

impl EvolutionEngine {
    pub const DEFAULT_DENSE_CAP: usize = 20_000;

    pub fn krylov() -> Self {
        Self {
            method: Method::Krylov,
            krylov_dim: 30,
            step_tolerance: 1e-12,
            dense_cap: Self::DEFAULT_DENSE_CAP,
        }
    }

    pub fn dense() -> Self {
        Self {
            method: Method::DenseEigen,
            ..Self::krylov()
        }
    }
}

impl Default for EvolutionEngine {
    fn default() -> Self {
        Self::krylov()
    }
}

/// A propagator bound to one Hamiltonian and sector. The dense method
/// diagonalizes once at construction.
#[derive(Debug)]
pub struct Propagator<'a> {
    engine: EvolutionEngine,
    matrix: &'a CouplingMatrix,
    basis: &'a SectorBasis,
    spectrum: Option<SymmetricEigen>,
}

impl<'a> Propagator<'a> {
    pub fn new(engine: EvolutionEngine, matrix: &'a CouplingMatrix, basis: &'a SectorBasis) -> Result<Self> {
        if matrix.size() != basis.length() {
            return Err(Error::DimensionMismatch {
                expected: basis.length(),
                found: matrix.size(),
            });
        }
        if engine.krylov_dim < 2 || !(engine.step_tolerance > 0.0) {
            return Err(invalid("Krylov dimension must be at least 2 and the tolerance positive"));
        }
        let spectrum = match engine.method {
            Method::DenseEigen => Some(symmetric_eigen(dense_hamiltonian(matrix, basis, engine.dense_cap)?)),
            Method::Krylov => None,
        };
        Ok(Self {
            engine,
            matrix,
            basis,
            spectrum,
        })
    }

    pub fn basis(&self) -> &SectorBasis {
        self.basis
    }

    pub fn evolve(&self, state: &QuantumState, t: f64) -> Result<QuantumState> {
        state.check(self.basis)?;
        let amps = self.evolve_amplitudes(state.amplitudes(), t)?;
        QuantumState::new(self.basis, amps)
    }

    pub fn evolve_amplitudes(&self, psi: &[Complex64], t: f64) -> Result<Vec<Complex64>> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(invalid("evolution time must be finite and non-negative"));
        }
        if psi.len() != self.basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.basis.dim(),
                found: psi.len(),
            });
        }
        if t == 0.0 {
            return Ok(psi.to_vec());
        }
        match &self.spectrum {
            Some(spec) => Ok(dense_evolve(spec, psi, t)),
            None => self.krylov_evolve(psi, t),
        }
    }

    /// Visits the evolved state at each of `times` (non-decreasing).
    pub fn trajectory<F>(&self, state: &QuantumState, times: &[f64], mut visit: F) -> Result<()>
    where
        F: FnMut(usize, &QuantumState) -> Result<()>,
    {
        state.check(self.basis)?;
        if times.windows(2).any(|w| w[1] < w[0]) {
            return Err(invalid("trajectory times must be non-decreasing"));
        }
        let mut current = state.clone();
        let mut now = 0.0;
        for (k, &t) in times.iter().enumerate() {
            if !(t >= 0.0) {
                return Err(invalid("evolution time must be non-negative"));
            }
            current = match self.spectrum {
                // dense evolution is exact from the initial state
                Some(_) => self.evolve(state, t)?,
                None => self.evolve(&current, t - now)?,
            };
            now = t;
            visit(k, &current)?;
        }
        Ok(())
    }

    fn apply(&self, input: &[Complex64], output: &mut [Complex64]) {
        apply_hamiltonian_rows(self.matrix, self.basis, input, 0, output);
    }

    fn krylov_evolve(&self, psi: &[Complex64], t: f64) -> Result<Vec<Complex64>> {
        let dim = psi.len();
        let m_max = self.engine.krylov_dim.min(dim);
        let tol = self.engine.step_tolerance;
        let mut v = psi.to_vec();
        let mut done = 0.0;
        let mut w = vec![Complex64::new(0.0, 0.0); dim];

        while done < t {
            let remaining = t - done;
            let beta0 = norm(&v);
            if beta0 == 0.0 {
                return Ok(v);
            }
            let mut q: Vec<Vec<Complex64>> = Vec::with_capacity(m_max);
            q.push(v.iter().map(|a| a / beta0).collect());
            let mut alpha: Vec<f64> = Vec::with_capacity(m_max);
            let mut beta: Vec<f64> = Vec::with_capacity(m_max);
            let mut exhausted = false;
            let mut projection: Option<(SymmetricEigen, f64)> = None;

            for j in 0..m_max {
                self.apply(&q[j], &mut w);
                let a = inner(&q[j], &w).re;
                for (wi, qi) in w.iter_mut().zip(&q[j]) {
                    *wi -= qi * a;
                }
                if j > 0 {
                    let b = beta[j - 1];
                    for (wi, qi) in w.iter_mut().zip(&q[j - 1]) {
                        *wi -= qi * b;
                    }
                }
                // full reorthogonalization
                for qk in &q {
                    let c = inner(qk, &w);
                    for (wi, qi) in w.iter_mut().zip(qk) {
                        *wi -= qi * c;
                    }
                }
                alpha.push(a);
                let b = norm(&w);
                let scale = a.abs() + beta.last().copied().unwrap_or(0.0);
                if b <= 1e-13 * scale || b == 0.0 {
                    exhausted = true;
                    beta.push(0.0);
                    break;
                }
                beta.push(b);
                // cheap early exit once the whole remaining step is accurate
                if j + 1 == m_max || (j >= 3 && j % 2 == 1) {
                    let eig = tridiagonal_eigen(&alpha, &beta[..alpha.len() - 1]);
                    let err = beta0 * b * propagated(&eig, remaining)[alpha.len() - 1].norm();
                    if err <= tol * remaining / t || j + 1 == m_max {
                        projection = Some((eig, b));
                        break;
                    }
                }
                if j + 1 < m_max {
                    q.push(w.iter().map(|x| x / b).collect());
                }
            }

            let k = alpha.len();
            let (eig, last_beta) = match projection {
                Some(p) => p,
                None => (tridiagonal_eigen(&alpha, &beta[..k - 1]), beta[k - 1]),
            };
            let mut h = remaining;
            let mut coeffs;
            loop {
                coeffs = propagated(&eig, h);
                let err = if exhausted { 0.0 } else { beta0 * last_beta * coeffs[k - 1].norm() };
                if err <= tol * h / t {
                    break;
                }
                h *= 0.5;
                if h < 1e-14 * t {
                    return Err(Error::NonConvergence {
                        what: "Krylov propagation",
                        iterations: k,
                        residual: err,
                    });
                }
            }
            for x in v.iter_mut() {
                *x = Complex64::new(0.0, 0.0);
            }
            for (c, qk) in coeffs.iter().zip(&q) {
                let c = c * beta0;
                for (x, qi) in v.iter_mut().zip(qk) {
                    *x += qi * c;
                }
            }
            done = if h == remaining { t } else { done + h };
        }
        Ok(v)
    }
}

fn tridiagonal_eigen(alpha: &[f64], off: &[f64]) -> SymmetricEigen {
    let k = alpha.len();
    let mut t = DMatrix::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i, i + 1)] = off[i];
            t[(i + 1, i)] = off[i];
        }
    }
    symmetric_eigen(t)
}

/// `exp(-i T h) e_1` in the Lanczos basis.
fn propagated(eig: &SymmetricEigen, h: f64) -> Vec<Complex64> {
    let k = eig.values.len();
    let mut out = vec![Complex64::new(0.0, 0.0); k];
    for a in 0..k {
        let phase = Complex64::new(0.0, -eig.values[a] * h).exp() * eig.vectors[(0, a)];
        for (i, o) in out.iter_mut().enumerate() {
            *o += phase * eig.vectors[(i, a)];
        }
    }
    out
}

fn dense_evolve(spec: &SymmetricEigen, psi: &[Complex64], t: f64) -> Vec<Complex64> {
    let dim = psi.len();
    let v = &spec.vectors;
    let mut coeff = vec![Complex64::new(0.0, 0.0); dim];
    for (a, c) in coeff.iter_mut().enumerate() {
        let col = v.column(a);
        let mut acc = Complex64::new(0.0, 0.0);
        for (x, p) in col.iter().zip(psi) {
            acc += p * *x;
        }
        *c = acc * Complex64::new(0.0, -spec.values[a] * t).exp();
    }
    let mut out = vec![Complex64::new(0.0, 0.0); dim];
    for (a, c) in coeff.iter().enumerate() {
        for (o, x) in out.iter_mut().zip(v.column(a).iter()) {
            *o += c * *x;
        }
    }
    out
}

/// `exp(-iHt)|ψ⟩` with the given engine.
pub fn evolve(
    engine: EvolutionEngine,
    matrix: &CouplingMatrix,
    basis: &SectorBasis,
    state: &QuantumState,
    t: f64,
) -> Result<QuantumState> {
    Propagator::new(engine, matrix, basis)?.evolve(state, t)
}
