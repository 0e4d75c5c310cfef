//! Conserved charges built from diagonal single-site operators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Lattice;

/// How the total charge is conserved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Conservation {
    /// `Q = Σ q_i` commutes with the Hamiltonian.
    U1,
    /// Only `Q mod 2` is conserved; such charges cannot drive twists.
    Parity,
}

/// Per-site charges `q_i`, diagonal in the local basis with integer spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChargeSpec {
    values: Vec<Vec<i64>>,
    q_max: f64,
    conservation: Conservation,
}

impl ChargeSpec {
    /// `values[k][s]` is the eigenvalue of `q_k` on local state `s`.
    pub fn new(values: Vec<Vec<i64>>, conservation: Conservation) -> Self {
        let q_max = values.iter().flatten().map(|q| q.unsigned_abs() as f64).fold(0.0, f64::max);
        ChargeSpec { values, q_max, conservation }
    }

    /// The same local charge on every site of `lattice`.
    pub fn uniform(lattice: &Lattice, local: &[i64], conservation: Conservation) -> Result<Self> {
        let n = lattice.n_sites();
        if (0..n).any(|k| lattice.local_dim(k) != local.len()) {
            return Err(Error::invalid("local charge length does not match the local dimension"));
        }
        Ok(ChargeSpec::new(vec![local.to_vec(); n], conservation))
    }

    pub fn n_sites(&self) -> usize {
        self.values.len()
    }

    pub fn local(&self, site: usize) -> &[i64] {
        &self.values[site]
    }

    pub fn q_max(&self) -> f64 {
        self.q_max
    }

    pub fn conservation(&self) -> Conservation {
        self.conservation
    }

    /// Multiplies every local charge by an integer.
    pub fn scaled(&self, factor: i64) -> Self {
        let values = self.values.iter().map(|v| v.iter().map(|q| q * factor).collect()).collect();
        ChargeSpec::new(values, self.conservation)
    }

    /// Charge restricted to sites selected by `keep`; other sites get zero.
    pub fn restricted(&self, keep: impl Fn(usize) -> bool) -> Self {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(k, v)| if keep(k) { v.clone() } else { vec![0; v.len()] })
            .collect();
        ChargeSpec { values, q_max: self.q_max, conservation: self.conservation }
    }

    /// Requires a `U1` charge, which twists and LSM operators need.
    pub fn require_u1(&self) -> Result<()> {
        match self.conservation {
            Conservation::U1 => Ok(()),
            Conservation::Parity => Err(Error::unsupported("charge is only conserved modulo 2")),
        }
    }

    /// Checks `q_{T k} = q_k` for every site.
    pub fn is_translation_invariant(&self, lattice: &Lattice) -> bool {
        (0..self.n_sites()).all(|k| match lattice.translate(k) {
            Ok(tk) => self.values[tk] == self.values[k],
            Err(_) => false,
        })
    }
}
