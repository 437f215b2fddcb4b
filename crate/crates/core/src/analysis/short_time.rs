use alloc::vec::Vec;

use crate::coupling::CouplingMatrix;
use crate::error::{invalid, Result};
use crate::field::CorrelationField;

/// Second-order expansion of the trace correlation:
/// `C_c(t) ≈ 1 − t² Σ_k J_ck²` at the center and `C_j(t) ≈ t² J_cj²` elsewhere.
pub fn short_time_expansion(matrix: &CouplingMatrix, center: usize, times: &[f64]) -> Result<CorrelationField> {
    let l = matrix.size();
    if center >= l {
        return Err(invalid("center site outside the chain"));
    }
    if times.iter().any(|t| !t.is_finite()) {
        return Err(invalid("times must be finite"));
    }
    let row_sum = matrix.squared_row_sum(center);
    let mut values = Vec::with_capacity(l * times.len());
    for &t in times {
        let t2 = t * t;
        for j in 0..l {
            values.push(if j == center {
                1.0 - t2 * row_sum
            } else {
                let c = matrix.get(center, j);
                t2 * c * c
            });
        }
    }
    let sigmas = alloc::vec![0.0; values.len()];
    CorrelationField::new(times.to_vec(), CorrelationField::chain_sites(l, center), values, sigmas)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::build_power_law;
    use crate::quantum::{full_trace_correlation, DEFAULT_BRUTE_FORCE_CAP};
    use alloc::vec;

    #[test]
    fn nearest_neighbour_and_power_law() {
        let mut entries = vec![0.0; 25];
        for i in 0..4 {
            entries[i * 5 + i + 1] = 0.5;
            entries[(i + 1) * 5 + i] = 0.5;
        }
        let nn = CouplingMatrix::from_entries(5, entries, 0.5, None, 1e-12).unwrap();
        let f = short_time_expansion(&nn, 2, &[0.2]).unwrap();
        assert!((f.value(0, 2) - (1.0 - 2.0 * 0.25 * 0.04)).abs() < 1e-15);
        assert!((f.value(0, 1) - 0.25 * 0.04).abs() < 1e-15);
        assert_eq!(f.value(0, 0), 0.0);

        let m = build_power_law(5, 1.0, 1.0).unwrap();
        let f = short_time_expansion(&m, 2, &[0.1]).unwrap();
        assert!((f.value(0, 2) - (1.0 - 2.5 * 0.01)).abs() < 1e-15);
    }

    #[test]
    fn third_order_agreement_with_exact_trace() {
        let m = build_power_law(8, 1.0, 1.1).unwrap();
        let times = [0.02, 0.04, 0.08, 0.16];
        let exact = full_trace_correlation(&m, &times, 4, DEFAULT_BRUTE_FORCE_CAP).unwrap();
        let ste = short_time_expansion(&m, 4, &times).unwrap();
        let ratios: Vec<f64> = times
            .iter()
            .enumerate()
            .map(|(k, t)| (exact.value(k, 4) - ste.value(k, 4)).abs() / (t * t * t))
            .collect();
        // the ratio stays bounded (it shrinks, the error being O(t⁴))
        for w in ratios.windows(2) {
            assert!(w[0] <= w[1] * 1.01 + 1e-6);
        }
    }
}
