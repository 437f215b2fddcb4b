use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Result};

/// Largest chain length representable by the bit encoding.
pub const MAX_SITES: usize = 40;

/// All `L`-bit configurations with exactly `n_up` set bits, ascending.
///
/// Bit `i` of a configuration is the spin on site `i` (1 = up). Lookup of a
/// configuration's position uses the combinatorial number system split into
/// a low-bit and a high-bit table.
#[derive(Debug, Clone)]
pub struct SectorBasis {
    length: usize,
    n_up: usize,
    states: Vec<u64>,
    split: usize,
    low_rank: Vec<usize>,
    // indexed by popcount(low bits) * 2^(L - split) + high bits
    high_rank: Vec<usize>,
}

/// `binomial(n, k)`, saturating at `u64::MAX`.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

impl SectorBasis {
    pub fn new(length: usize, n_up: usize) -> Result<Self> {
        if length == 0 || length > MAX_SITES {
            return Err(invalid("sector length must be between 1 and 40 sites"));
        }
        if n_up > length {
            return Err(invalid("n_up cannot exceed the chain length"));
        }
        let dim = binomial(length, n_up);
        if dim > (u32::MAX as u64) {
            return Err(invalid("sector dimension too large"));
        }
        let mut states = Vec::with_capacity(dim as usize);
        if n_up == 0 {
            states.push(0);
        } else {
            let limit = 1u64 << length;
            let mut c = (1u64 << n_up) - 1;
            while c < limit {
                states.push(c);
                // Gosper's hack: next larger integer with the same popcount
                let lowest = c & c.wrapping_neg();
                let ripple = c + lowest;
                c = (((ripple ^ c) >> 2) / lowest) | ripple;
            }
        }

        let split = length / 2;
        let high_bits = length - split;
        let mut low_rank = vec![0usize; 1 << split];
        for (x, slot) in low_rank.iter_mut().enumerate() {
            let mut m = 0;
            let mut r = 0u64;
            for p in 0..split {
                if x >> p & 1 == 1 {
                    m += 1;
                    r += binomial(p, m);
                }
            }
            *slot = r as usize;
        }
        let mut high_rank = vec![0usize; (split + 1) << high_bits];
        for offset in 0..=split {
            for y in 0..(1usize << high_bits) {
                let mut m = offset;
                let mut r = 0u64;
                for p in 0..high_bits {
                    if y >> p & 1 == 1 {
                        m += 1;
                        r = r.saturating_add(binomial(split + p, m));
                    }
                }
                high_rank[(offset << high_bits) | y] = r.min(usize::MAX as u64) as usize;
            }
        }
        Ok(Self {
            length,
            n_up,
            states,
            split,
            low_rank,
            high_rank,
        })
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn n_up(&self) -> usize {
        self.n_up
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[u64] {
        &self.states
    }

    #[inline]
    pub fn state(&self, index: usize) -> u64 {
        self.states[index]
    }

    /// Position of a configuration known to belong to this sector.
    #[inline]
    pub fn rank(&self, config: u64) -> usize {
        let mask = (1u64 << self.split) - 1;
        let low = (config & mask) as usize;
        let high = (config >> self.split) as usize;
        let offset = low.count_ones() as usize;
        self.low_rank[low] + self.high_rank[(offset << (self.length - self.split)) | high]
    }

    /// Position of `config`, or `None` if it is not in the sector.
    pub fn index_of(&self, config: u64) -> Option<usize> {
        if config >> self.length != 0 || config.count_ones() as usize != self.n_up {
            return None;
        }
        Some(self.rank(config))
    }

    /// Total magnetization `Σ_j σ^z_j = 2 n_up - L` of the sector.
    pub fn magnetization(&self) -> i64 {
        2 * self.n_up as i64 - self.length as i64
    }
}
