use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};

/// `C_j(t)` on a (time × site) grid with per-point standard errors.
///
/// Sites are signed offsets from the centre site (the centre is `0`). Values
/// are stored time-major: all sites of `times[0]`, then all sites of
/// `times[1]`, and so on.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationField {
    times: Vec<f64>,
    sites: Vec<i64>,
    values: Vec<f64>,
    sigmas: Vec<f64>,
}

impl CorrelationField {
    pub fn new(times: Vec<f64>, sites: Vec<i64>, values: Vec<f64>, sigmas: Vec<f64>) -> Result<Self> {
        let n = times.len() * sites.len();
        if values.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: values.len(),
            });
        }
        if sigmas.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: sigmas.len(),
            });
        }
        if sigmas.iter().any(|s| !(*s >= 0.0)) {
            return Err(invalid("standard errors must be non-negative"));
        }
        if times.iter().any(|t| !t.is_finite()) || values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("correlation field entries must be finite"));
        }
        Ok(Self {
            times,
            sites,
            values,
            sigmas,
        })
    }

    pub fn zeros(times: Vec<f64>, sites: Vec<i64>) -> Self {
        let n = times.len() * sites.len();
        Self {
            times,
            sites,
            values: vec![0.0; n],
            sigmas: vec![0.0; n],
        }
    }

    /// Sites `0..length` relabelled as offsets from `center`.
    pub fn chain_sites(length: usize, center: usize) -> Vec<i64> {
        (0..length).map(|i| i as i64 - center as i64).collect()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn sites(&self) -> &[i64] {
        &self.sites
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sigmas(&self) -> &[f64] {
        &self.sigmas
    }

    #[inline]
    pub fn value(&self, time_index: usize, site_index: usize) -> f64 {
        self.values[time_index * self.sites.len() + site_index]
    }

    #[inline]
    pub fn sigma(&self, time_index: usize, site_index: usize) -> f64 {
        self.sigmas[time_index * self.sites.len() + site_index]
    }

    pub fn set(&mut self, time_index: usize, site_index: usize, value: f64, sigma: f64) {
        let k = time_index * self.sites.len() + site_index;
        self.values[k] = value;
        self.sigmas[k] = sigma;
    }

    /// The spatial profile at one time.
    pub fn profile(&self, time_index: usize) -> &[f64] {
        let n = self.sites.len();
        &self.values[time_index * n..(time_index + 1) * n]
    }

    pub fn profile_sigmas(&self, time_index: usize) -> &[f64] {
        let n = self.sites.len();
        &self.sigmas[time_index * n..(time_index + 1) * n]
    }

    pub fn site_position(&self, offset: i64) -> Option<usize> {
        self.sites.iter().position(|&s| s == offset)
    }

    /// Time series at one site offset (`0` gives the autocorrelation).
    pub fn series(&self, offset: i64) -> Option<Vec<f64>> {
        let s = self.site_position(offset)?;
        Some((0..self.times.len()).map(|t| self.value(t, s)).collect())
    }

    /// Whether every point has a strictly positive standard error.
    pub fn has_sigmas(&self) -> bool {
        !self.sigmas.is_empty() && self.sigmas.iter().all(|&s| s > 0.0)
    }

    /// `|C| ≤ 1 + 3σ` everywhere.
    pub fn within_bounds(&self) -> bool {
        self.values
            .iter()
            .zip(&self.sigmas)
            .all(|(v, s)| v.abs() <= 1.0 + 3.0 * s + 1e-12)
    }

    /// `Σ_j C_j(t)` for each time.
    pub fn site_sums(&self) -> Vec<f64> {
        (0..self.times.len()).map(|t| self.profile(t).iter().sum()).collect()
    }
}
