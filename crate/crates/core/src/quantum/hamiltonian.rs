use alloc::vec;
use nalgebra::DMatrix;
use num_complex::Complex64;

use super::basis::SectorBasis;
use super::state::QuantumState;
use crate::coupling::CouplingMatrix;
use crate::error::{Error, Result};

fn check_sizes(matrix: &CouplingMatrix, basis: &SectorBasis) -> Result<()> {
    if matrix.size() != basis.length() {
        return Err(Error::DimensionMismatch {
            expected: basis.length(),
            found: matrix.size(),
        });
    }
    Ok(())
}

/// Writes `(H ψ)` restricted to output rows `start..start + output.len()`.
///
/// Each output amplitude gathers `J_ij ψ(c)` from every configuration `c`
/// that differs from the output configuration by one up/down exchange, so
/// disjoint output ranges can be filled independently.
pub fn apply_hamiltonian_rows(
    matrix: &CouplingMatrix,
    basis: &SectorBasis,
    input: &[Complex64],
    start: usize,
    output: &mut [Complex64],
) {
    let mask = if basis.length() == 64 { u64::MAX } else { (1u64 << basis.length()) - 1 };
    for (offset, out) in output.iter_mut().enumerate() {
        let config = basis.state(start + offset);
        let mut acc = Complex64::new(0.0, 0.0);
        let mut ups = config;
        while ups != 0 {
            let i = ups.trailing_zeros() as usize;
            ups &= ups - 1;
            let row = matrix.row(i);
            let mut downs = !config & mask;
            while downs != 0 {
                let j = downs.trailing_zeros() as usize;
                downs &= downs - 1;
                let source = config ^ ((1u64 << i) | (1u64 << j));
                acc += input[basis.rank(source)] * row[j];
            }
        }
        *out = acc;
    }
}

/// `H ψ` with `H = Σ_{i<j} J_ij (σ⁺_i σ⁻_j + h.c.)`, without storing `H`.
pub fn apply_hamiltonian(
    matrix: &CouplingMatrix,
    basis: &SectorBasis,
    state: &QuantumState,
) -> Result<QuantumState> {
    check_sizes(matrix, basis)?;
    state.check(basis)?;
    let mut out = vec![Complex64::new(0.0, 0.0); basis.dim()];
    apply_hamiltonian_rows(matrix, basis, state.amplitudes(), 0, &mut out);
    QuantumState::new(basis, out)
}

/// Dense real-symmetric sector Hamiltonian, refused above `cap` rows.
pub fn dense_hamiltonian(matrix: &CouplingMatrix, basis: &SectorBasis, cap: usize) -> Result<DMatrix<f64>> {
    check_sizes(matrix, basis)?;
    let dim = basis.dim();
    if dim > cap {
        return Err(Error::CapExceeded {
            what: "sector dimension",
            value: dim,
            cap,
        });
    }
    let mask = (1u64 << basis.length()) - 1;
    let mut h = DMatrix::zeros(dim, dim);
    for (a, &config) in basis.states().iter().enumerate() {
        let mut ups = config;
        while ups != 0 {
            let i = ups.trailing_zeros() as usize;
            ups &= ups - 1;
            let mut downs = !config & mask;
            while downs != 0 {
                let j = downs.trailing_zeros() as usize;
                downs &= downs - 1;
                let b = basis.rank(config ^ ((1u64 << i) | (1u64 << j)));
                h[(a, b)] += matrix.get(i, j);
            }
        }
    }
    Ok(h)
}

/// `⟨ψ|H|ψ⟩ / ⟨ψ|ψ⟩`.
pub fn energy(matrix: &CouplingMatrix, basis: &SectorBasis, state: &QuantumState) -> Result<Complex64> {
    let h = apply_hamiltonian(matrix, basis, state)?;
    let num = super::state::inner(state.amplitudes(), h.amplitudes());
    let den = state.amplitudes().iter().map(|a| a.norm_sqr()).sum::<f64>();
    Ok(num / den)
}
