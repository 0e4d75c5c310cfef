//! Configuration indexing for tensor-product Hilbert spaces.
//!
//! The full-space index of a configuration `(s_0, ..., s_{n-1})` is
//! lexicographic with the last site least significant.

use crate::charge::{ChargeSpec, Conservation};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
struct Sector {
    target: i64,
    states: Vec<usize>,
}

/// Bijection between configurations and contiguous indices, optionally
/// restricted to one charge sector.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisIndexer {
    dims: Vec<usize>,
    strides: Vec<usize>,
    full_dim: usize,
    sector: Option<Sector>,
}

impl BasisIndexer {
    pub fn full(dims: &[usize]) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::invalid("local dimensions must be positive"));
        }
        let mut strides = vec![1usize; dims.len()];
        for k in (0..dims.len() - 1).rev() {
            strides[k] = strides[k + 1]
                .checked_mul(dims[k + 1])
                .ok_or_else(|| Error::invalid("Hilbert space dimension overflows"))?;
        }
        let full_dim = strides[0]
            .checked_mul(dims[0])
            .ok_or_else(|| Error::invalid("Hilbert space dimension overflows"))?;
        Ok(BasisIndexer { dims: dims.to_vec(), strides, full_dim, sector: None })
    }

    /// Keeps the configurations whose total charge equals `target`
    /// (or matches it modulo 2 for parity charges).
    pub fn sector(dims: &[usize], charge: &ChargeSpec, target: i64) -> Result<Self> {
        let mut b = BasisIndexer::full(dims)?;
        if charge.n_sites() != dims.len() {
            return Err(Error::invalid("charge and basis have different site counts"));
        }
        for (k, &d) in dims.iter().enumerate() {
            if charge.local(k).len() != d {
                return Err(Error::invalid(format!("charge on site {k} does not match local dimension")));
            }
        }
        let parity = charge.conservation() == Conservation::Parity;
        let states: Vec<usize> = (0..b.full_dim)
            .filter(|&c| {
                let q = b.total_charge(c, charge);
                if parity {
                    (q - target).rem_euclid(2) == 0
                } else {
                    q == target
                }
            })
            .collect();
        if states.is_empty() {
            return Err(Error::invalid(format!("charge sector {target} is empty")));
        }
        b.sector = Some(Sector { target, states });
        Ok(b)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn n_sites(&self) -> usize {
        self.dims.len()
    }

    pub fn full_dim(&self) -> usize {
        self.full_dim
    }

    pub fn dim(&self) -> usize {
        match &self.sector {
            Some(s) => s.states.len(),
            None => self.full_dim,
        }
    }

    pub fn target(&self) -> Option<i64> {
        self.sector.as_ref().map(|s| s.target)
    }

    pub fn is_sector(&self) -> bool {
        self.sector.is_some()
    }

    /// Full-space configuration index of basis state `k`.
    pub fn config(&self, k: usize) -> usize {
        match &self.sector {
            Some(s) => s.states[k],
            None => k,
        }
    }

    /// Basis index of a full-space configuration, if it lies in the domain.
    pub fn index(&self, config: usize) -> Option<usize> {
        match &self.sector {
            Some(s) => s.states.binary_search(&config).ok(),
            None => (config < self.full_dim).then_some(config),
        }
    }

    pub fn digit(&self, config: usize, site: usize) -> usize {
        (config / self.strides[site]) % self.dims[site]
    }

    pub fn stride(&self, site: usize) -> usize {
        self.strides[site]
    }

    /// Replaces the digit of `site` in `config`.
    pub fn with_digit(&self, config: usize, site: usize, value: usize) -> usize {
        config - self.digit(config, site) * self.strides[site] + value * self.strides[site]
    }

    pub fn digits(&self, config: usize) -> Vec<usize> {
        (0..self.dims.len()).map(|k| self.digit(config, k)).collect()
    }

    pub fn config_of(&self, digits: &[usize]) -> usize {
        digits.iter().zip(&self.strides).map(|(d, s)| d * s).sum()
    }

    pub fn total_charge(&self, config: usize, charge: &ChargeSpec) -> i64 {
        (0..self.dims.len()).map(|k| charge.local(k)[self.digit(config, k)]).sum()
    }

    /// Basis-state positions of the sector states inside the full space.
    pub fn embedding(&self) -> Vec<usize> {
        (0..self.dim()).map(|k| self.config(k)).collect()
    }
}
