use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;

use super::basis::SectorBasis;
use crate::error::{invalid, Error, Result};

/// Amplitudes over the configurations of one magnetization sector.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    length: usize,
    n_up: usize,
    amplitudes: Vec<Complex64>,
}

impl QuantumState {
    pub fn new(basis: &SectorBasis, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                found: amplitudes.len(),
            });
        }
        Ok(Self {
            length: basis.length(),
            n_up: basis.n_up(),
            amplitudes,
        })
    }

    /// The computational-basis product state `config`.
    pub fn product(basis: &SectorBasis, config: u64) -> Result<Self> {
        let index = basis
            .index_of(config)
            .ok_or_else(|| invalid("configuration does not belong to the sector"))?;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); basis.dim()];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Self::new(basis, amplitudes)
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn n_up(&self) -> usize {
        self.n_up
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amplitudes)
    }

    pub(crate) fn check(&self, basis: &SectorBasis) -> Result<()> {
        if self.length != basis.length() || self.n_up != basis.n_up() || self.amplitudes.len() != basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                found: self.amplitudes.len(),
            });
        }
        Ok(())
    }
}

pub(crate) fn norm(v: &[Complex64]) -> f64 {
    libm::sqrt(v.iter().map(|a| a.norm_sqr()).sum::<f64>())
}

pub(crate) fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Per-site `⟨σ^z_j⟩` of a state, normalized by its squared norm.
pub fn measure_sigma_z(basis: &SectorBasis, state: &QuantumState) -> Result<Vec<f64>> {
    state.check(basis)?;
    let mut up = vec![0.0; basis.length()];
    let mut total = 0.0;
    for (&config, amp) in basis.states().iter().zip(state.amplitudes()) {
        let p = amp.norm_sqr();
        total += p;
        let mut bits = config;
        while bits != 0 {
            let j = bits.trailing_zeros() as usize;
            up[j] += p;
            bits &= bits - 1;
        }
    }
    if !(total > 0.0) {
        return Err(invalid("cannot measure a zero state"));
    }
    Ok(up.into_iter().map(|u| (2.0 * u - total) / total).collect())
}

/// `σ^z_j` of configuration `config` as ±1.
#[inline]
pub fn spin(config: u64, site: usize) -> f64 {
    if config >> site & 1 == 1 {
        1.0
    } else {
        -1.0
    }
}
