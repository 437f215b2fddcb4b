use alloc::vec::Vec;
use num_complex::Complex64;

use crate::coupling::CouplingMatrix;
use crate::error::{invalid, Result};
use crate::linalg::symmetric_eigen;

/// `P_j(t) = |exp(-iJt)_{j,source}|²` for one excitation above the polarized
/// background, where the one-magnon Hamiltonian is the coupling matrix itself.
///
/// Returns one row of `L` probabilities per time.
pub fn single_excitation_profile(matrix: &CouplingMatrix, source: usize, times: &[f64]) -> Result<Vec<Vec<f64>>> {
    let n = matrix.size();
    if source >= n {
        return Err(invalid("source site outside the chain"));
    }
    if times.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
        return Err(invalid("times must be finite and non-negative"));
    }
    let eig = symmetric_eigen(matrix.to_dmatrix());
    Ok(times
        .iter()
        .map(|&t| {
            (0..n)
                .map(|j| {
                    let amp: Complex64 = (0..n)
                        .map(|a| {
                            Complex64::new(0.0, -eig.values[a] * t).exp()
                                * (eig.vectors[(j, a)] * eig.vectors[(source, a)])
                        })
                        .sum();
                    amp.norm_sqr()
                })
                .collect()
        })
        .collect())
}
