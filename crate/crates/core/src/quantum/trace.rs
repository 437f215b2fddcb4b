//! Infinite-temperature correlation `C_j(t) = 2^{-L} Tr[σ^z_j(t) σ^z_c]`.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::basis::SectorBasis;
use super::hamiltonian::dense_hamiltonian;
use super::propagate::{EvolutionEngine, Propagator};
use super::state::{spin, QuantumState};
use crate::coupling::CouplingMatrix;
use crate::error::{invalid, Error, Result};
use crate::field::CorrelationField;
use crate::linalg::symmetric_eigen;

/// Largest chain the exact trace accepts by default.
pub const DEFAULT_BRUTE_FORCE_CAP: usize = 14;

fn check_inputs(matrix: &CouplingMatrix, times: &[f64], center: usize) -> Result<usize> {
    let l = matrix.size();
    if center >= l {
        return Err(invalid("center site outside the chain"));
    }
    if times.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
        return Err(invalid("times must be finite and non-negative"));
    }
    Ok(l)
}

/// Adds `scale · Σ_c w_c ⟨c|σ^z_j(t)|c⟩` over one sector to `out`
/// (time-major, `L` sites per time).
///
/// With `A_j = Vᵀ diag(z_j) V` and `B = Vᵀ diag(w) V` in the eigenbasis the
/// sum is `Σ_ab cos((E_a − E_b)t) (A_j)_ab B_ab`, evaluated as the quadratic
/// form `Re u† (A_j ∘ B) u` with `u_a = e^{-iE_a t}`. At `t = 0` the literal
/// sum over configurations is used so the result is exact.
fn accumulate_sector(
    matrix: &CouplingMatrix,
    basis: &SectorBasis,
    weights: &[f64],
    times: &[f64],
    scale: f64,
    out: &mut [f64],
) -> Result<()> {
    let l = basis.length();
    let d = basis.dim();
    let states = basis.states();

    for (k, &t) in times.iter().enumerate() {
        if t == 0.0 {
            for j in 0..l {
                let s: f64 = states.iter().zip(weights).map(|(&c, w)| w * spin(c, j)).sum();
                out[k * l + j] += scale * s;
            }
        }
    }
    if times.iter().all(|&t| t == 0.0) {
        return Ok(());
    }

    let spec = symmetric_eigen(dense_hamiltonian(matrix, basis, usize::MAX)?);
    let v = &spec.vectors;
    let weighted = DMatrix::from_fn(d, d, |r, c| weights[r] * v[(r, c)]);
    let b = v.tr_mul(&weighted);

    let phases: Vec<Vec<Complex64>> = times
        .iter()
        .map(|&t| spec.values.iter().map(|e| Complex64::new(0.0, -e * t).exp()).collect())
        .collect();

    for j in 0..l {
        // A_j = 2 P_jᵀ P_j − 1 with P_j the rows of V whose site j is up
        let rows: Vec<usize> = (0..d).filter(|&r| states[r] >> j & 1 == 1).collect();
        let mut m = if rows.is_empty() {
            DMatrix::zeros(d, d)
        } else {
            let p = DMatrix::from_fn(rows.len(), d, |r, c| v[(rows[r], c)]);
            p.tr_mul(&p) * 2.0
        };
        for a in 0..d {
            m[(a, a)] -= 1.0;
        }
        m.component_mul_assign(&b);

        for (k, &t) in times.iter().enumerate() {
            if t == 0.0 {
                continue;
            }
            let u = &phases[k];
            let re = DVector::from_iterator(d, u.iter().map(|z| z.re));
            let im = DVector::from_iterator(d, u.iter().map(|z| z.im));
            // Re(u† M u) = reᵀ M re + imᵀ M im for real symmetric M
            let s = re.dot(&(&m * &re)) + im.dot(&(&m * &im));
            out[k * l + j] += scale * s;
        }
    }
    Ok(())
}

/// Exact trace over all `2^L` product states, summed sector by sector.
///
/// Sectors `n` and `L − n` contribute equally (global spin flip), so only
/// `n ≤ L/2` is diagonalized.
pub fn full_trace_correlation(
    matrix: &CouplingMatrix,
    times: &[f64],
    center: usize,
    max_sites: usize,
) -> Result<CorrelationField> {
    let l = check_inputs(matrix, times, center)?;
    if l > max_sites {
        return Err(Error::CapExceeded {
            what: "brute-force trace length",
            value: l,
            cap: max_sites,
        });
    }
    let mut out = vec![0.0; times.len() * l];
    let norm = libm::ldexp(1.0, -(l as i32));
    for n in 0..=l / 2 {
        let basis = SectorBasis::new(l, n)?;
        let weights: Vec<f64> = basis.states().iter().map(|&c| spin(c, center)).collect();
        let mult = if 2 * n == l { 1.0 } else { 2.0 };
        accumulate_sector(matrix, &basis, &weights, times, mult * norm, &mut out)?;
    }
    let sigmas = vec![0.0; out.len()];
    CorrelationField::new(times.to_vec(), CorrelationField::chain_sites(l, center), out, sigmas)
}

/// Exact average of `σ_c ⟨c|σ^z_j(t)|c⟩` over every configuration with the
/// center spin up and `k` up spins among the other sites, for each `k` in
/// `remainder_up`, all configurations weighted equally.
///
/// This is the quantity the conjugate-pair estimator converges to.
pub fn sector_trace_correlation(
    matrix: &CouplingMatrix,
    times: &[f64],
    center: usize,
    remainder_up: &[usize],
) -> Result<CorrelationField> {
    let l = check_inputs(matrix, times, center)?;
    let mut ks: Vec<usize> = remainder_up.to_vec();
    ks.sort_unstable();
    ks.dedup();
    if ks.is_empty() || ks.iter().any(|&k| k > l - 1) {
        return Err(invalid("remainder up-counts must lie in 0..L-1"));
    }
    let total: f64 = ks
        .iter()
        .map(|&k| super::basis::binomial(l - 1, k) as f64)
        .sum();
    let mut out = vec![0.0; times.len() * l];
    for &k in &ks {
        let basis = SectorBasis::new(l, k + 1)?;
        let weights: Vec<f64> = basis
            .states()
            .iter()
            .map(|&c| if c >> center & 1 == 1 { 1.0 } else { 0.0 })
            .collect();
        accumulate_sector(matrix, &basis, &weights, times, 1.0 / total, &mut out)?;
    }
    let sigmas = vec![0.0; out.len()];
    CorrelationField::new(times.to_vec(), CorrelationField::chain_sites(l, center), out, sigmas)
}

/// Typicality estimate of the trace from `samples` Gaussian random states on
/// the full `2^L` space: `Re⟨ψ(t)|σ^z_j e^{-iHt} σ^z_c|ψ⟩ / ⟨ψ|ψ⟩`.
///
/// Sample `r` draws from `ChaCha8Rng` seeded with `seed` on stream `r`.
/// Sigmas are the standard error over samples; with a single sample the
/// typical fluctuation `2^{-L/2}` is reported instead.
pub fn typicality_trace(
    engine: EvolutionEngine,
    matrix: &CouplingMatrix,
    times: &[f64],
    center: usize,
    samples: usize,
    seed: u64,
) -> Result<CorrelationField> {
    let l = check_inputs(matrix, times, center)?;
    if samples == 0 {
        return Err(invalid("typicality needs at least one random state"));
    }
    if l > super::basis::MAX_SITES {
        return Err(Error::CapExceeded {
            what: "chain length",
            value: l,
            cap: super::basis::MAX_SITES,
        });
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(invalid("times must be non-decreasing"));
    }
    let bases: Vec<SectorBasis> = (0..=l).map(|n| SectorBasis::new(l, n)).collect::<Result<_>>()?;
    let props: Vec<Propagator<'_>> = bases
        .iter()
        .map(|b| Propagator::new(engine, matrix, b))
        .collect::<Result<_>>()?;

    let cells = times.len() * l;
    let mut sum = vec![0.0; cells];
    let mut sum_sq = vec![0.0; cells];
    let mut value = vec![0.0; cells];
    for r in 0..samples {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(r as u64);
        let psi: Vec<Vec<Complex64>> = bases
            .iter()
            .map(|b| {
                (0..b.dim())
                    .map(|_| {
                        let re: f64 = StandardNormal.sample(&mut rng);
                        let im: f64 = StandardNormal.sample(&mut rng);
                        Complex64::new(re, im)
                    })
                    .collect()
            })
            .collect();
        let norm_sq: f64 = psi.iter().flatten().map(|a| a.norm_sqr()).sum();
        value.iter_mut().for_each(|v| *v = 0.0);

        for (n, (basis, prop)) in bases.iter().zip(&props).enumerate() {
            let states = basis.states();
            let phi: Vec<Complex64> = psi[n]
                .iter()
                .zip(states)
                .map(|(a, &c)| a * spin(c, center))
                .collect();
            let mut evolved = Vec::with_capacity(times.len());
            prop.trajectory(&QuantumState::new(basis, psi[n].clone())?, times, |_, s| {
                evolved.push(s.amplitudes().to_vec());
                Ok(())
            })?;
            prop.trajectory(&QuantumState::new(basis, phi)?, times, |k, s| {
                let row = &mut value[k * l..(k + 1) * l];
                for ((a, b), &c) in evolved[k].iter().zip(s.amplitudes()).zip(states) {
                    let w = (a.conj() * b).re / norm_sq;
                    for (j, v) in row.iter_mut().enumerate() {
                        *v += w * spin(c, j);
                    }
                }
                Ok(())
            })?;
        }
        for ((s, q), v) in sum.iter_mut().zip(sum_sq.iter_mut()).zip(&value) {
            *s += v;
            *q += v * v;
        }
    }

    let rf = samples as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / rf).collect();
    let sigmas: Vec<f64> = if samples > 1 {
        mean.iter()
            .zip(&sum_sq)
            .map(|(m, q)| libm::sqrt(((q / rf - m * m) * rf / (rf - 1.0)).max(0.0) / rf))
            .collect()
    } else {
        vec![libm::sqrt(libm::ldexp(1.0, -(l as i32))); cells]
    };
    CorrelationField::new(times.to_vec(), CorrelationField::chain_sites(l, center), mean, sigmas)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::build_power_law;
    use crate::quantum::{evolve, measure_sigma_z};

    /// Literal `2^{-L} Σ_c σ_c ⟨c|σ^z_j(t)|c⟩` by evolving every product state.
    fn literal_trace(matrix: &CouplingMatrix, t: f64, center: usize) -> Vec<f64> {
        let l = matrix.size();
        let mut out = vec![0.0; l];
        for n in 0..=l {
            let basis = SectorBasis::new(l, n).unwrap();
            for &c in basis.states() {
                let s = QuantumState::product(&basis, c).unwrap();
                let e = evolve(EvolutionEngine::dense(), matrix, &basis, &s, t).unwrap();
                let z = measure_sigma_z(&basis, &e).unwrap();
                for j in 0..l {
                    out[j] += spin(c, center) * z[j] / (1u64 << l) as f64;
                }
            }
        }
        out
    }

    #[test]
    fn two_site_closed_form() {
        let j = 0.7;
        let m = build_power_law(2, j, 1.0).unwrap();
        let times = [0.0, 0.4, 1.3];
        let f = full_trace_correlation(&m, &times, 1, DEFAULT_BRUTE_FORCE_CAP).unwrap();
        // polarized states keep C = 1 on both sites, the exchange pair oscillates
        for (k, &t) in times.iter().enumerate() {
            let c2 = libm::cos(2.0 * j * t);
            assert!((f.value(k, 1) - (1.0 + c2) / 2.0).abs() < 1e-13);
            assert!((f.value(k, 0) - (1.0 - c2) / 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn exact_delta_at_zero_and_conserved_sum() {
        let m = build_power_law(7, 1.0, 1.1).unwrap();
        let f = full_trace_correlation(&m, &[0.0, 0.5, 3.0], 3, DEFAULT_BRUTE_FORCE_CAP).unwrap();
        for (s, &site) in f.sites().iter().enumerate() {
            assert_eq!(f.value(0, s), if site == 0 { 1.0 } else { 0.0 });
        }
        for total in f.site_sums() {
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn spectral_sum_matches_literal_sum() {
        let m = build_power_law(6, 1.0, 0.8).unwrap();
        let times = [0.3, 2.1];
        let f = full_trace_correlation(&m, &times, 3, DEFAULT_BRUTE_FORCE_CAP).unwrap();
        for (k, &t) in times.iter().enumerate() {
            let lit = literal_trace(&m, t, 3);
            for (j, want) in lit.iter().enumerate() {
                assert!((f.value(k, j) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sector_trace_on_all_sectors_is_conditional_average() {
        // every remainder count, weighted by its size, reproduces the full
        // trace once the center-down half is added by symmetry
        let m = build_power_law(5, 1.0, 1.0).unwrap();
        let times = [0.0, 0.9];
        let all: Vec<usize> = (0..5).collect();
        let sec = sector_trace_correlation(&m, &times, 2, &all).unwrap();
        let full = full_trace_correlation(&m, &times, 2, DEFAULT_BRUTE_FORCE_CAP).unwrap();
        for (a, b) in sec.values().iter().zip(full.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn cap_is_enforced() {
        let m = build_power_law(6, 1.0, 1.0).unwrap();
        assert!(matches!(
            full_trace_correlation(&m, &[1.0], 3, 5),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn typicality_agrees_with_exact_trace() {
        let m = build_power_law(10, 1.0, 1.0).unwrap();
        let times = [0.0, 0.5, 2.0];
        let r = 10;
        let exact = full_trace_correlation(&m, &times, 5, DEFAULT_BRUTE_FORCE_CAP).unwrap();
        let typ = typicality_trace(EvolutionEngine::krylov(), &m, &times, 5, r, 3).unwrap();
        let bound = 5.0 * libm::pow(2.0, -5.0) / libm::sqrt(r as f64);
        for (a, b) in typ.values().iter().zip(exact.values()) {
            assert!((a - b).abs() < bound, "{a} vs {b}");
        }
        // C_c(0) = 1 holds sample by sample
        assert_eq!(typ.sigma(0, 5), 0.0);
        assert!(typ.sigma(1, 5) > 0.0);
    }

    #[test]
    fn typicality_is_seed_deterministic() {
        let m = build_power_law(6, 1.0, 1.2).unwrap();
        let a = typicality_trace(EvolutionEngine::dense(), &m, &[1.0], 3, 3, 9).unwrap();
        let b = typicality_trace(EvolutionEngine::dense(), &m, &[1.0], 3, 3, 9).unwrap();
        let c = typicality_trace(EvolutionEngine::dense(), &m, &[1.0], 3, 3, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
