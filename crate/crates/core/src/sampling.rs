//! Conjugate-pair product-state sampling of the infinite-temperature trace
//! and finite-shot projection noise.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::analysis::FlipRates;
use crate::coupling::CouplingMatrix;
use crate::error::{invalid, Error, Result};
use crate::field::CorrelationField;
use crate::quantum::{measure_sigma_z, spin, EvolutionEngine, Propagator, QuantumState, SectorBasis, MAX_SITES};

/// Stream offset separating state-preparation errors from shot noise.
const PREP_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

/// Product initial states in conjugate pairs: member `2p + 1` is member
/// `2p` with every spin except the center flipped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InitialStateEnsemble {
    length: usize,
    center: usize,
    seed: u64,
    members: Vec<u64>,
}

/// Options for [`draw_ensemble_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EnsembleOptions {
    /// Magnetization `Σ σ^z` of the non-central sites for the first member
    /// of each pair. `None` picks 0 when `L − 1` is even and −1 otherwise.
    pub remainder_magnetization: Option<i64>,
    /// Append a copy of every pair with the center spin down.
    pub bias_cancel: bool,
}

impl InitialStateEnsemble {
    /// Validates an explicit member list, e.g. one read from disk.
    pub fn from_members(length: usize, center: usize, seed: u64, members: Vec<u64>) -> Result<Self> {
        check_chain(length, center)?;
        if members.is_empty() || !members.len().is_multiple_of(2) {
            return Err(invalid("ensemble needs a positive, even member count"));
        }
        let mask = conjugate_mask(length, center);
        for (k, pair) in members.chunks(2).enumerate() {
            if pair.iter().any(|&c| c >> length != 0) {
                return Err(invalid("configuration has bits beyond the chain length"));
            }
            if pair[1] != pair[0] ^ mask {
                return Err(invalid(alloc::format!("members {} and {} are not conjugate", 2 * k, 2 * k + 1)));
            }
        }
        Ok(Self {
            length,
            center,
            seed,
            members,
        })
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn center(&self) -> usize {
        self.center
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn members(&self) -> &[u64] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// `σ^z` of the center in member `index`.
    pub fn center_sign(&self, index: usize) -> f64 {
        spin(self.members[index], self.center)
    }
}

fn check_chain(length: usize, center: usize) -> Result<()> {
    if !(2..=MAX_SITES).contains(&length) {
        return Err(invalid(alloc::format!("chain length must lie in 2..={MAX_SITES}")));
    }
    if center >= length {
        return Err(invalid("center site outside the chain"));
    }
    Ok(())
}

fn conjugate_mask(length: usize, center: usize) -> u64 {
    ((1u64 << length) - 1) & !(1u64 << center)
}

/// Draws `count` members (`count / 2` pairs) with the center up and the
/// default remainder magnetization.
pub fn draw_ensemble(length: usize, count: usize, center: usize, seed: u64) -> Result<InitialStateEnsemble> {
    draw_ensemble_with(length, count, center, seed, EnsembleOptions::default())
}

/// Pair `p` draws its remainder uniformly from `ChaCha8Rng` seeded with
/// `seed` on stream `p`, so any subset of pairs can be regenerated alone.
pub fn draw_ensemble_with(
    length: usize,
    count: usize,
    center: usize,
    seed: u64,
    options: EnsembleOptions,
) -> Result<InitialStateEnsemble> {
    check_chain(length, center)?;
    if count == 0 || !count.is_multiple_of(2) {
        return Err(invalid("member count must be positive and even"));
    }
    let rest = length - 1;
    let magnetization = options
        .remainder_magnetization
        .unwrap_or(if rest.is_multiple_of(2) { 0 } else { -1 });
    let up2 = magnetization + rest as i64;
    if up2 < 0 || up2 > 2 * rest as i64 || up2 % 2 != 0 {
        return Err(Error::InfeasibleSector(alloc::format!(
            "{rest} non-central sites cannot carry magnetization {magnetization}"
        )));
    }
    let up = (up2 / 2) as usize;
    let mask = conjugate_mask(length, center);
    let others: Vec<usize> = (0..length).filter(|&i| i != center).collect();

    let mut members = Vec::with_capacity(if options.bias_cancel { 2 * count } else { count });
    for pair in 0..count / 2 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(pair as u64);
        let mut config = 1u64 << center;
        for k in index::sample(&mut rng, rest, up).iter() {
            config |= 1u64 << others[k];
        }
        members.push(config);
        members.push(config ^ mask);
    }
    if options.bias_cancel {
        let flipped: Vec<u64> = members.iter().map(|c| c ^ (1u64 << center)).collect();
        members.extend(flipped);
    }
    Ok(InitialStateEnsemble {
        length,
        center,
        seed,
        members,
    })
}

/// Shots per initial state and time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shots {
    /// Exact expectation values.
    Exact,
    Finite(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MeasurementPlan {
    pub initial_states: usize,
    pub shots: Shots,
    pub seed: u64,
}

impl MeasurementPlan {
    pub fn new(initial_states: usize, shots: Shots, seed: u64) -> Result<Self> {
        if initial_states == 0 || !initial_states.is_multiple_of(2) {
            return Err(invalid("the number of initial states must be positive and even"));
        }
        if shots == Shots::Finite(0) {
            return Err(invalid("at least one shot per state is required"));
        }
        Ok(Self {
            initial_states,
            shots,
            seed,
        })
    }

    pub fn exact(initial_states: usize) -> Result<Self> {
        Self::new(initial_states, Shots::Exact, 0)
    }
}

/// Noise applied on top of the coherent evolution.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NoiseOptions {
    /// Independent per-site flip probability of the prepared configuration.
    /// One flip pattern is drawn per member and kept for all its shots.
    pub prep_flip_probability: f64,
    /// Incoherent flips applied to each site's `⟨σ^z⟩` after evolution.
    pub decay: Option<FlipRates>,
}

/// Per-member output of [`Estimator::evaluate_member`].
#[derive(Debug, Clone, PartialEq)]
pub struct MemberEstimate {
    /// `σ_c ⟨σ^z_j(t)⟩`, time-major.
    pub signed: Vec<f64>,
    /// Projection-noise variance `σ_u²` per point (zero for exact plans).
    pub variance: Vec<f64>,
}

/// The correlation estimator split into independent per-member work and an
/// ordered reduction, so callers may evaluate members in any order.
#[derive(Debug)]
pub struct Estimator<'a> {
    ensemble: &'a InitialStateEnsemble,
    matrix: &'a CouplingMatrix,
    times: Vec<f64>,
    plan: MeasurementPlan,
    noise: NoiseOptions,
    prepared: Vec<u64>,
    bases: Vec<Option<SectorBasis>>,
}

impl<'a> Estimator<'a> {
    pub fn new(
        ensemble: &'a InitialStateEnsemble,
        matrix: &'a CouplingMatrix,
        times: &[f64],
        plan: MeasurementPlan,
        noise: NoiseOptions,
    ) -> Result<Self> {
        let l = ensemble.length();
        if matrix.size() != l {
            return Err(Error::DimensionMismatch {
                expected: l,
                found: matrix.size(),
            });
        }
        if plan.initial_states != ensemble.len() {
            return Err(Error::DimensionMismatch {
                expected: plan.initial_states,
                found: ensemble.len(),
            });
        }
        if times.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) || times.windows(2).any(|w| w[1] < w[0]) {
            return Err(invalid("times must be finite, non-negative and non-decreasing"));
        }
        if !(0.0..=1.0).contains(&noise.prep_flip_probability) {
            return Err(invalid("preparation flip probability must lie in [0, 1]"));
        }
        let prepared: Vec<u64> = (0..ensemble.len())
            .map(|u| {
                let c = ensemble.members()[u];
                if noise.prep_flip_probability == 0.0 {
                    return c;
                }
                let mut rng = ChaCha8Rng::seed_from_u64(ensemble.seed() ^ PREP_SALT);
                rng.set_stream(u as u64);
                (0..l).fold(c, |acc, j| {
                    if rng.random::<f64>() < noise.prep_flip_probability {
                        acc ^ 1u64 << j
                    } else {
                        acc
                    }
                })
            })
            .collect();
        let mut bases: Vec<Option<SectorBasis>> = (0..=l).map(|_| None).collect();
        for &c in &prepared {
            let n = c.count_ones() as usize;
            if bases[n].is_none() {
                bases[n] = Some(SectorBasis::new(l, n)?);
            }
        }
        Ok(Self {
            ensemble,
            matrix,
            times: times.to_vec(),
            plan,
            noise,
            prepared,
            bases,
        })
    }

    pub fn member_count(&self) -> usize {
        self.prepared.len()
    }

    /// Configuration actually evolved for member `index`.
    pub fn prepared(&self, index: usize) -> u64 {
        self.prepared[index]
    }

    /// One propagator per occupied sector, indexed by up-spin count.
    pub fn propagators(&self, engine: EvolutionEngine) -> Result<Vec<Option<Propagator<'_>>>> {
        self.bases
            .iter()
            .map(|b| b.as_ref().map(|b| Propagator::new(engine, self.matrix, b)).transpose())
            .collect()
    }

    pub fn evaluate_member(&self, propagators: &[Option<Propagator<'_>>], index: usize) -> Result<MemberEstimate> {
        let l = self.ensemble.length();
        let config = self.prepared[index];
        let n = config.count_ones() as usize;
        let prop = propagators
            .get(n)
            .and_then(Option::as_ref)
            .ok_or_else(|| invalid("no propagator for the member's sector"))?;
        let basis = prop.basis();
        let sign = self.ensemble.center_sign(index);
        let mut signed = vec![0.0; self.times.len() * l];
        let mut variance = vec![0.0; self.times.len() * l];
        let mut rng = ChaCha8Rng::seed_from_u64(self.plan.seed);
        rng.set_stream(index as u64);

        let times = &self.times;
        prop.trajectory(&QuantumState::product(basis, config)?, times, |k, state| {
            let z = measure_sigma_z(basis, state)?;
            for (j, &zj) in z.iter().enumerate() {
                let m = match self.noise.decay {
                    Some(rates) => rates.damp_magnetization(zj, times[k]),
                    None => zj,
                };
                let cell = k * l + j;
                match self.plan.shots {
                    Shots::Exact => signed[cell] = sign * m,
                    Shots::Finite(shots) => {
                        let p = (0.5 * (1.0 + m)).clamp(0.0, 1.0);
                        let ups = Binomial::new(shots as u64, p)
                            .map_err(|_| invalid("invalid shot probability"))?
                            .sample(&mut rng);
                        let p_hat = ups as f64 / shots as f64;
                        signed[cell] = sign * (2.0 * p_hat - 1.0);
                        let s = shot_noise_sigma(p_hat, shots)?;
                        variance[cell] = s * s;
                    }
                }
            }
            Ok(())
        })?;
        Ok(MemberEstimate { signed, variance })
    }

    /// Ordered reduction of all member estimates into `C_j(t)`.
    ///
    /// Exact plans report the standard error of the pair means; finite-shot
    /// plans report `2 sqrt(Σ_u σ_u²) / N_u`.
    pub fn reduce(&self, estimates: &[MemberEstimate]) -> Result<CorrelationField> {
        let l = self.ensemble.length();
        let cells = self.times.len() * l;
        if estimates.len() != self.member_count() {
            return Err(Error::DimensionMismatch {
                expected: self.member_count(),
                found: estimates.len(),
            });
        }
        let nu = estimates.len() as f64;
        let mut values = vec![0.0; cells];
        for e in estimates {
            for (v, s) in values.iter_mut().zip(&e.signed) {
                *v += s;
            }
        }
        values.iter_mut().for_each(|v| *v /= nu);

        let sigmas = match self.plan.shots {
            Shots::Exact => {
                let pairs = estimates.len() / 2;
                let mut sq = vec![0.0; cells];
                for pair in estimates.chunks(2) {
                    for (cell, q) in sq.iter_mut().enumerate() {
                        let mean = 0.5 * (pair[0].signed[cell] + pair[1].signed[cell]);
                        let d = mean - values[cell];
                        *q += d * d;
                    }
                }
                if pairs > 1 {
                    let p = pairs as f64;
                    sq.iter().map(|q| (q / (p - 1.0) / p).sqrt()).collect()
                } else {
                    vec![0.0; cells]
                }
            }
            Shots::Finite(_) => {
                let mut sq = vec![0.0; cells];
                for e in estimates {
                    for (q, v) in sq.iter_mut().zip(&e.variance) {
                        *q += v;
                    }
                }
                sq.iter().map(|q| 2.0 * q.sqrt() / nu).collect()
            }
        };
        CorrelationField::new(
            self.times.clone(),
            CorrelationField::chain_sites(l, self.ensemble.center()),
            values,
            sigmas,
        )
    }
}

/// `C_j(t) = (1/M) Σ_u σ_c^{(u)} ⟨σ^z_j(t)⟩_u`, evaluated member by member.
pub fn estimate_correlation(
    ensemble: &InitialStateEnsemble,
    engine: EvolutionEngine,
    matrix: &CouplingMatrix,
    times: &[f64],
    plan: MeasurementPlan,
    noise: NoiseOptions,
) -> Result<CorrelationField> {
    let est = Estimator::new(ensemble, matrix, times, plan, noise)?;
    let props = est.propagators(engine)?;
    let members = (0..est.member_count())
        .map(|u| est.evaluate_member(&props, u))
        .collect::<Result<Vec<_>>>()?;
    est.reduce(&members)
}

/// Binomial projection noise `sqrt(p(1 − p)/N_m)`.
pub fn shot_noise_sigma(p: f64, shots: u32) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid("probability must lie in [0, 1]"));
    }
    if shots == 0 {
        return Err(invalid("at least one shot is required"));
    }
    Ok((p * (1.0 - p) / shots as f64).sqrt())
}

/// Standard error of the correlation, `2 sqrt(Σ_u σ_u²) / N_u`.
pub fn correlation_sigma(per_state: &[f64]) -> Result<f64> {
    if per_state.is_empty() {
        return Err(invalid("need at least one initial state"));
    }
    let s: f64 = per_state.iter().map(|s| s * s).sum();
    Ok(2.0 * s.sqrt() / per_state.len() as f64)
}
