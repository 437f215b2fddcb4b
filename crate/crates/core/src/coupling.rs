//! Spin–spin coupling matrices: ideal power laws, trapped-ion chains built
//! from transverse normal modes, and power-law fits of a realized matrix.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use nalgebra::DMatrix;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::linalg;

/// Symmetric, zero-diagonal exchange matrix `J_ij` in rad/s.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    size: usize,
    entries: Vec<f64>,
    nominal_j: f64,
    nominal_alpha: Option<f64>,
}

impl CouplingMatrix {
    /// Builds a matrix from row-major entries.
    ///
    /// Entries must be finite, symmetric to `tolerance` (relative to the
    /// largest magnitude) and have a vanishing diagonal. The stored matrix is
    /// the exact symmetrization `(J + Jᵀ)/2` with the diagonal cleared.
    pub fn from_entries(
        size: usize,
        entries: Vec<f64>,
        nominal_j: f64,
        nominal_alpha: Option<f64>,
        tolerance: f64,
    ) -> Result<Self> {
        if size < 2 {
            return Err(invalid("coupling matrix needs at least two sites"));
        }
        if entries.len() != size * size {
            return Err(Error::DimensionMismatch {
                expected: size * size,
                found: entries.len(),
            });
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(invalid("coupling matrix has non-finite entries"));
        }
        let scale = entries.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        let mut sym = entries;
        for i in 0..size {
            if sym[i * size + i].abs() > tolerance * scale {
                return Err(invalid("coupling matrix has a non-zero diagonal"));
            }
            sym[i * size + i] = 0.0;
            for j in (i + 1)..size {
                let a = sym[i * size + j];
                let b = sym[j * size + i];
                if (a - b).abs() > tolerance * scale {
                    return Err(invalid("coupling matrix is not symmetric"));
                }
                let m = 0.5 * (a + b);
                sym[i * size + j] = m;
                sym[j * size + i] = m;
            }
        }
        Ok(Self {
            size,
            entries: sym,
            nominal_j,
            nominal_alpha,
        })
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

    /// Row-major entries.
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Nominal coupling strength `J` in rad/s.
    pub fn nominal_j(&self) -> f64 {
        self.nominal_j
    }

    pub fn nominal_alpha(&self) -> Option<f64> {
        self.nominal_alpha
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.size, self.size, &self.entries)
    }

    /// `Σ_k J_ik²`, the short-time loss rate of site `i`.
    pub fn squared_row_sum(&self, i: usize) -> f64 {
        self.row(i).iter().map(|v| v * v).sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            size: self.size,
            entries: self.entries.iter().map(|v| v * factor).collect(),
            nominal_j: self.nominal_j * factor,
            nominal_alpha: self.nominal_alpha,
        }
    }
}

/// `J_ij = J / |i - j|^alpha`.
pub fn build_power_law(size: usize, j: f64, alpha: f64) -> Result<CouplingMatrix> {
    if size < 2 {
        return Err(invalid("power law needs at least two sites"));
    }
    if !(j > 0.0 && j.is_finite()) {
        return Err(invalid("coupling strength J must be positive"));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(invalid("exponent alpha must be positive"));
    }
    let mut entries = vec![0.0; size * size];
    for a in 0..size {
        for b in 0..size {
            if a != b {
                let d = a.abs_diff(b) as f64;
                entries[a * size + b] = j / d.powf(alpha);
            }
        }
    }
    Ok(CouplingMatrix {
        size,
        entries,
        nominal_j: j,
        nominal_alpha: Some(alpha),
    })
}

/// Trap and laser parameters of a linear ion chain driven by a two-tone
/// (Mølmer–Sørensen) beatnote detuned from the transverse modes.
#[derive(Debug, Clone, PartialEq)]
pub struct IonChainSpec {
    pub ion_count: usize,
    /// Axial trap frequency, Hz.
    pub axial_frequency: f64,
    /// The two radial trap frequencies, Hz.
    pub radial_frequencies: [f64; 2],
    /// Per-ion Rabi frequency Ω_i, rad/s.
    pub rabi_frequencies: Vec<f64>,
    /// Beatnote detuning above the highest centre-of-mass mode, Hz.
    pub beatnote_detuning_from_com: f64,
    /// Lamb–Dicke prefactor of the centre-of-mass mode. Mode `m` gets
    /// `lamb_dicke_scale / sqrt(ω_m / ω_COM)` times its normalized mode vector.
    pub lamb_dicke_scale: f64,
    /// Smallest admissible |Δ_m|, rad/s.
    pub resonance_floor: f64,
}

impl IonChainSpec {
    pub const DEFAULT_RESONANCE_FLOOR: f64 = 2.0 * PI * 1.0e3;

    /// Uniform illumination (equal Ω on every ion).
    pub fn uniform(
        ion_count: usize,
        axial_frequency: f64,
        radial_frequencies: [f64; 2],
        rabi_frequency: f64,
        beatnote_detuning_from_com: f64,
        lamb_dicke_scale: f64,
    ) -> Self {
        Self {
            ion_count,
            axial_frequency,
            radial_frequencies,
            rabi_frequencies: vec![rabi_frequency; ion_count],
            beatnote_detuning_from_com,
            lamb_dicke_scale,
            resonance_floor: Self::DEFAULT_RESONANCE_FLOOR,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.ion_count < 2 {
            return Err(invalid("ion chain needs at least two ions"));
        }
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.axial_frequency) || !self.radial_frequencies.iter().all(|&f| positive(f)) {
            return Err(invalid("trap frequencies must be positive"));
        }
        if self.rabi_frequencies.len() != self.ion_count {
            return Err(Error::DimensionMismatch {
                expected: self.ion_count,
                found: self.rabi_frequencies.len(),
            });
        }
        if !self.rabi_frequencies.iter().all(|&f| positive(f)) {
            return Err(invalid("Rabi frequencies must be positive"));
        }
        if !positive(self.lamb_dicke_scale) {
            return Err(invalid("Lamb-Dicke scale must be positive"));
        }
        if !self.beatnote_detuning_from_com.is_finite() || !(self.resonance_floor >= 0.0) {
            return Err(invalid("detuning and resonance floor must be finite"));
        }
        Ok(())
    }
}

const POSITION_TOLERANCE: f64 = 1e-12;
const POSITION_MAX_ITER: usize = 200;

fn coulomb_energy(u: &[f64]) -> f64 {
    let mut v = 0.0;
    for i in 0..u.len() {
        v += 0.5 * u[i] * u[i];
        for j in (i + 1)..u.len() {
            v += 1.0 / (u[j] - u[i]).abs();
        }
    }
    v
}

fn coulomb_gradient(u: &[f64]) -> Vec<f64> {
    let n = u.len();
    let mut g = u.to_vec();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let d = u[i] - u[j];
                g[i] -= d.signum() / (d * d);
            }
        }
    }
    g
}

/// Equilibrium positions in units of `(e² / 4πε₀ m ω_z²)^{1/3}`, sorted
/// ascending, from damped Newton iteration on the harmonic-plus-Coulomb
/// potential starting from an evenly spaced chain.
pub fn compute_equilibrium_positions(spec: &IonChainSpec) -> Result<Vec<f64>> {
    let n = spec.ion_count;
    if n < 2 {
        return Err(invalid("ion chain needs at least two ions"));
    }
    let spacing = 2.0 / (n as f64).powf(0.56);
    let mut u: Vec<f64> = (0..n).map(|i| (i as f64 - 0.5 * (n - 1) as f64) * spacing).collect();
    let norm = |g: &[f64]| g.iter().map(|x| x * x).sum::<f64>().sqrt();

    for _ in 0..POSITION_MAX_ITER {
        let g = coulomb_gradient(&u);
        let gnorm = norm(&g);
        if gnorm < POSITION_TOLERANCE {
            return Ok(u);
        }
        let hessian = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                1.0 + (0..n)
                    .filter(|&k| k != i)
                    .map(|k| 2.0 / (u[i] - u[k]).abs().powi(3))
                    .sum::<f64>()
            } else {
                -2.0 / (u[i] - u[j]).abs().powi(3)
            }
        });
        let neg: Vec<f64> = g.iter().map(|x| -x).collect();
        let step = linalg::solve(hessian, &neg).unwrap_or(neg);
        let e0 = coulomb_energy(&u);
        let mut damping = 1.0;
        loop {
            let trial: Vec<f64> = u.iter().zip(&step).map(|(x, s)| x + damping * s).collect();
            let ordered = trial.windows(2).all(|w| w[0] < w[1]);
            if ordered && (coulomb_energy(&trial) <= e0 || norm(&coulomb_gradient(&trial)) < gnorm) {
                u = trial;
                break;
            }
            damping *= 0.5;
            if damping < 1e-12 {
                return Err(Error::NonConvergence {
                    what: "equilibrium positions",
                    iterations: POSITION_MAX_ITER,
                    residual: gnorm,
                });
            }
        }
    }
    let residual = norm(&coulomb_gradient(&u));
    if residual < POSITION_TOLERANCE {
        Ok(u)
    } else {
        Err(Error::NonConvergence {
            what: "equilibrium positions",
            iterations: POSITION_MAX_ITER,
            residual,
        })
    }
}

/// Transverse normal modes along one radial direction.
#[derive(Debug, Clone)]
pub struct ModeSet {
    /// Radial trap frequency of this direction, Hz.
    pub radial_frequency: f64,
    /// Mode frequencies in Hz, descending (centre-of-mass mode first).
    pub frequencies: Vec<f64>,
    /// Orthonormal mode vectors; column `m` is mode `m`, `b_im = vectors[(i, m)]`.
    pub vectors: DMatrix<f64>,
}

/// Transverse modes for both radial directions (2N modes in total).
pub fn compute_transverse_modes(spec: &IonChainSpec, positions: &[f64]) -> Result<[ModeSet; 2]> {
    spec.validate()?;
    let n = spec.ion_count;
    if positions.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: positions.len(),
        });
    }
    let build = |radial: f64| -> Result<ModeSet> {
        let ratio2 = (radial / spec.axial_frequency).powi(2);
        let k = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                ratio2
                    - (0..n)
                        .filter(|&m| m != i)
                        .map(|m| 1.0 / (positions[i] - positions[m]).abs().powi(3))
                        .sum::<f64>()
            } else {
                1.0 / (positions[i] - positions[j]).abs().powi(3)
            }
        });
        let eig = linalg::symmetric_eigen(k);
        if eig.values[0] <= 0.0 {
            return Err(Error::UnstableChain {
                eigenvalue: eig.values[0],
            });
        }
        // descending frequency order
        let frequencies = eig
            .values
            .iter()
            .rev()
            .map(|&l| spec.axial_frequency * l.sqrt())
            .collect();
        let vectors = DMatrix::from_fn(n, n, |i, m| {
            let col = n - 1 - m;
            let sign = if eig.vectors.column(col).sum() < 0.0 { -1.0 } else { 1.0 };
            sign * eig.vectors[(i, col)]
        });
        Ok(ModeSet {
            radial_frequency: radial,
            frequencies,
            vectors,
        })
    };
    Ok([build(spec.radial_frequencies[0])?, build(spec.radial_frequencies[1])?])
}

/// `J_ij = (Ω_i Ω_j / 2) Σ_m η_im η_jm / Δ_m` over all 2N transverse modes.
pub fn build_ion_chain_matrix(spec: &IonChainSpec) -> Result<CouplingMatrix> {
    spec.validate()?;
    let positions = compute_equilibrium_positions(spec)?;
    let modes = compute_transverse_modes(spec, &positions)?;
    let n = spec.ion_count;
    let beatnote = spec.radial_frequencies[0].max(spec.radial_frequencies[1]) + spec.beatnote_detuning_from_com;

    let mut sum = vec![0.0; n * n];
    let mut index = 0;
    for set in &modes {
        let com = set.frequencies[0];
        for (m, &freq) in set.frequencies.iter().enumerate() {
            let detuning = 2.0 * PI * (beatnote - freq);
            if detuning.abs() < spec.resonance_floor {
                return Err(Error::Resonance {
                    mode: index,
                    detuning,
                    floor: spec.resonance_floor,
                });
            }
            let s = spec.lamb_dicke_scale / (freq / com).sqrt();
            for i in 0..n {
                let eta_i = s * set.vectors[(i, m)];
                for j in 0..n {
                    if i != j {
                        sum[i * n + j] += eta_i * s * set.vectors[(j, m)] / detuning;
                    }
                }
            }
            index += 1;
        }
    }
    for i in 0..n {
        for j in 0..n {
            sum[i * n + j] *= 0.5 * spec.rabi_frequencies[i] * spec.rabi_frequencies[j];
        }
    }
    let nearest = (0..n - 1).map(|i| sum[i * n + i + 1]).sum::<f64>() / (n - 1) as f64;
    CouplingMatrix::from_entries(n, sum, nearest, None, 1e-12)
}

/// Power-law approximation `J_ij ≈ J / |i-j|^alpha` of a realized matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit {
    pub j: f64,
    pub alpha: f64,
    /// Root-mean-square residual of `log J_ij` over all pairs `i < j`.
    pub rms_log_residual: f64,
}

/// Unweighted least squares of `log J_ij` against `log |i-j|` over all `i < j`.
pub fn fit_power_law(matrix: &CouplingMatrix) -> Result<PowerLawFit> {
    let n = matrix.size();
    let mut pts = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = matrix.get(i, j);
            if !(v > 0.0) {
                return Err(invalid("power-law fit needs strictly positive couplings"));
            }
            pts.push((((j - i) as f64).ln(), v.ln()));
        }
    }
    let count = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / count;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / count;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx <= 0.0 {
        return Err(Error::Unidentifiable(
            "all pairs share one distance; exponent is undetermined".into(),
        ));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = pts
        .iter()
        .map(|p| {
            let r = p.1 - (intercept + slope * p.0);
            r * r
        })
        .sum();
    Ok(PowerLawFit {
        j: intercept.exp(),
        alpha: -slope,
        rms_log_residual: (rss / count).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn reference_trap(n: usize) -> IonChainSpec {
        IonChainSpec::uniform(n, 126.3e3, [2.93e6, 2.898e6], 2.0 * PI * 20e3, 40e3, 0.05)
    }

    #[test]
    fn power_law_entries() {
        let m = build_power_law(3, 1.0, 2.0).unwrap();
        assert_eq!(m.get(0, 1), 1.0);
        assert_eq!(m.get(0, 2), 0.25);
        assert_eq!(m.get(2, 0), 0.25);
        assert_eq!(m.get(1, 1), 0.0);

        let m = build_power_law(2, 116.0, 1.5).unwrap();
        assert_eq!(m.get(0, 1), 116.0);

        let m = build_power_law(5, 1.0, 1.0).unwrap();
        assert_relative_eq!(m.squared_row_sum(2), 2.5, epsilon = 1e-15);
    }

    #[test]
    fn power_law_rejects_bad_arguments() {
        assert!(build_power_law(1, 1.0, 1.0).is_err());
        assert!(build_power_law(4, 0.0, 1.0).is_err());
        assert!(build_power_law(4, 1.0, -1.0).is_err());
    }

    #[test]
    fn from_entries_checks_invariants() {
        assert!(CouplingMatrix::from_entries(2, vec![0.0, 1.0, 1.1, 0.0], 1.0, None, 1e-9).is_err());
        assert!(CouplingMatrix::from_entries(2, vec![0.5, 1.0, 1.0, 0.0], 1.0, None, 1e-9).is_err());
        assert!(CouplingMatrix::from_entries(2, vec![0.0, f64::NAN, f64::NAN, 0.0], 1.0, None, 1e-9).is_err());
        let m = CouplingMatrix::from_entries(2, vec![0.0, 1.0, 1.0 + 1e-12, 0.0], 1.0, None, 1e-9).unwrap();
        assert_eq!(m.get(0, 1), m.get(1, 0));
    }

    #[test]
    fn two_and_three_ion_equilibria() {
        let p = compute_equilibrium_positions(&reference_trap(2)).unwrap();
        let u = 0.25f64.cbrt();
        assert_relative_eq!(p[0], -u, epsilon = 1e-12);
        assert_relative_eq!(p[1], u, epsilon = 1e-12);

        let p = compute_equilibrium_positions(&reference_trap(3)).unwrap();
        let u = 1.25f64.cbrt();
        assert_relative_eq!(p[0], -u, epsilon = 1e-12);
        assert!(p[1].abs() < 1e-12);
        assert_relative_eq!(p[2], u, epsilon = 1e-12);
    }

    #[test]
    fn equilibrium_is_antisymmetric() {
        for n in [4, 7, 25, 51] {
            let p = compute_equilibrium_positions(&reference_trap(n)).unwrap();
            assert!(p.windows(2).all(|w| w[0] < w[1]));
            for i in 0..n {
                assert!((p[i] + p[n - 1 - i]).abs() < 1e-9, "n={n} i={i}");
            }
            assert!(coulomb_gradient(&p).iter().all(|g| g.abs() < 1e-11));
        }
    }

    #[test]
    fn two_ion_transverse_modes() {
        let spec = reference_trap(2);
        let pos = compute_equilibrium_positions(&spec).unwrap();
        let modes = compute_transverse_modes(&spec, &pos).unwrap();
        for set in &modes {
            let wr = set.radial_frequency;
            let wz = spec.axial_frequency;
            assert_relative_eq!(set.frequencies[0], wr, max_relative = 1e-12);
            assert_relative_eq!(set.frequencies[1], (wr * wr - wz * wz).sqrt(), max_relative = 1e-12);
        }
    }

    #[test]
    fn com_mode_and_orthonormality() {
        let spec = reference_trap(9);
        let pos = compute_equilibrium_positions(&spec).unwrap();
        for set in compute_transverse_modes(&spec, &pos).unwrap() {
            assert_relative_eq!(set.frequencies[0], set.radial_frequency, max_relative = 1e-12);
            let inv = 1.0 / 3.0;
            for i in 0..9 {
                assert!((set.vectors[(i, 0)] - inv).abs() < 1e-10);
            }
            let gram = set.vectors.transpose() * &set.vectors;
            let err = (gram - DMatrix::<f64>::identity(9, 9)).abs().max();
            assert!(err < 1e-12, "orthonormality error {err}");
        }
    }

    #[test]
    fn weak_radial_confinement_is_rejected() {
        let mut spec = reference_trap(25);
        spec.radial_frequencies = [400e3, 400e3];
        let pos = compute_equilibrium_positions(&spec).unwrap();
        assert!(matches!(
            compute_transverse_modes(&spec, &pos),
            Err(Error::UnstableChain { .. })
        ));
    }

    #[test]
    fn resonance_floor_is_enforced() {
        let mut spec = reference_trap(5);
        spec.beatnote_detuning_from_com = 100.0;
        assert!(matches!(build_ion_chain_matrix(&spec), Err(Error::Resonance { .. })));
    }

    #[test]
    fn two_ion_single_mode_coupling() {
        // One direction effectively out of play: keep it, but compare against
        // the explicit two-mode sum by hand.
        let spec = reference_trap(2);
        let m = build_ion_chain_matrix(&spec).unwrap();
        let pos = compute_equilibrium_positions(&spec).unwrap();
        let modes = compute_transverse_modes(&spec, &pos).unwrap();
        let beat = 2.93e6 + 40e3;
        let omega = 2.0 * PI * 20e3;
        let mut expected = 0.0;
        for set in &modes {
            for (mi, f) in set.frequencies.iter().enumerate() {
                let s = 0.05 / (f / set.frequencies[0]).sqrt();
                let eta0 = s * set.vectors[(0, mi)];
                let eta1 = s * set.vectors[(1, mi)];
                expected += omega * omega / 2.0 * eta0 * eta1 / (2.0 * PI * (beat - f));
            }
        }
        assert_relative_eq!(m.get(0, 1), expected, max_relative = 1e-12);
        // single retained mode, by hand: Ω²η²/(2Δ)
        let eta = 0.05 / 2f64.sqrt();
        let com_only = omega * omega * eta * eta / (2.0 * 2.0 * PI * 40e3);
        let set = &modes[0];
        let s = 0.05;
        let got = omega * omega / 2.0 * (s * set.vectors[(0, 0)]) * (s * set.vectors[(1, 0)]) / (2.0 * PI * 40e3);
        assert_relative_eq!(got, com_only, max_relative = 1e-12);
    }

    #[test]
    fn ion_chain_matrix_structure() {
        let spec = reference_trap(25);
        let m = build_ion_chain_matrix(&spec).unwrap();
        let n = 25;
        for i in 0..n {
            for j in 0..n {
                assert!((m.get(i, j) - m.get(n - 1 - i, n - 1 - j)).abs() < 1e-10 * m.get(0, 1).abs());
            }
        }
        // decays with distance from the centre
        for d in 1..12 {
            assert!(m.get(12, 12 + d) > m.get(12, 12 + d + 1));
        }
        let fit = fit_power_law(&m).unwrap();
        assert!(fit.alpha > 0.5 && fit.alpha < 3.0, "alpha = {}", fit.alpha);
        assert!(fit.rms_log_residual > 0.0);

        let mut doubled = spec.clone();
        doubled.rabi_frequencies.iter_mut().for_each(|o| *o *= 2.0);
        let m2 = build_ion_chain_matrix(&doubled).unwrap();
        for (a, b) in m.entries().iter().zip(m2.entries()) {
            assert!((4.0 * a - b).abs() <= 1e-12 * b.abs().max(1e-300));
        }
    }

    #[test]
    fn power_law_fit_is_self_consistent() {
        let m = build_power_law(20, 1.0, 1.1).unwrap();
        let fit = fit_power_law(&m).unwrap();
        assert_relative_eq!(fit.j, 1.0, epsilon = 1e-10);
        assert_relative_eq!(fit.alpha, 1.1, epsilon = 1e-10);
        assert!(fit.rms_log_residual < 1e-12);

        let fit2 = fit_power_law(&m.scaled(2.0)).unwrap();
        assert_relative_eq!(fit2.j, 2.0, epsilon = 1e-10);
        assert_relative_eq!(fit2.alpha, 1.1, epsilon = 1e-10);
    }

    #[test]
    fn power_law_fit_rejects_non_positive() {
        let mut e = build_power_law(4, 1.0, 1.0).unwrap().entries().to_vec();
        e[1] = -1.0;
        e[4] = -1.0;
        let m = CouplingMatrix::from_entries(4, e, 1.0, None, 1e-9).unwrap();
        assert!(fit_power_law(&m).is_err());
        assert!(fit_power_law(&build_power_law(2, 1.0, 1.0).unwrap()).is_err());
    }
}
