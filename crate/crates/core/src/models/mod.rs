//! Hamiltonians as sums of local terms, model builders, twists and
//! Lieb-Robinson constants.

mod builders;
mod constants;
mod spec;
mod twist;

pub use builders::{gapped_test_chain, heisenberg_chain, majumdar_ghosh, xxz_torus};
pub use constants::{lr_constants, strength_and_range};
pub use spec::{Model, ModelSpec};
pub use twist::{flux_torus_hamiltonian, left_half_weights, twist_derivative, twisted_hamiltonian, TwistAngle, TwistSpec};

pub use crate::charge::{ChargeSpec, Conservation};

use ndarray::Array2;

use crate::basis::BasisIndexer;
use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::linalg::{hermiticity_defect, C64};
use crate::operator::LocalTerm;
use crate::sparse::Csr;

/// `H = Σ_X h_X` with one self-adjoint term per distinct support `X`.
#[derive(Debug, Clone, PartialEq)]
pub struct TermSum {
    lattice: Lattice,
    terms: Vec<LocalTerm>,
}

impl TermSum {
    pub fn new(lattice: Lattice) -> Self {
        TermSum { lattice, terms: Vec::new() }
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn terms(&self) -> &[LocalTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Adds `matrix` on `sites`, merging with an existing term of equal support.
    /// Zero terms are discarded.
    pub fn add(&mut self, matrix: Array2<C64>, sites: &[usize]) -> Result<()> {
        let scale = matrix.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        if hermiticity_defect(&matrix) > 1e-12 * scale.max(1.0) {
            return Err(Error::invalid(format!("term on sites {sites:?} is not self-adjoint")));
        }
        let term = LocalTerm::new(matrix, sites, &self.lattice)?;
        self.insert(term);
        Ok(())
    }

    fn insert(&mut self, term: LocalTerm) {
        if term.matrix().iter().all(|z| *z == C64::new(0.0, 0.0)) {
            return;
        }
        if let Some(k) = self.terms.iter().position(|t| t.sites() == term.sites()) {
            let merged = self.terms[k].map_matrix(|m| m + term.matrix());
            if merged.sites() == term.sites() {
                self.terms[k] = merged;
            } else {
                self.terms.remove(k);
                self.insert(merged);
            }
        } else {
            self.terms.push(term);
        }
    }

    /// Rebuilds from raw terms, re-minimizing and merging supports.
    pub(crate) fn from_terms(lattice: Lattice, terms: impl IntoIterator<Item = LocalTerm>) -> Self {
        let mut h = TermSum::new(lattice);
        for t in terms {
            h.insert(t);
        }
        h
    }

    /// `c H` for real `c`.
    pub fn scaled(&self, c: f64) -> TermSum {
        TermSum::from_terms(self.lattice.clone(), self.terms.iter().map(|t| t.map_matrix(|m| m * c)))
    }

    /// `a H + b K` on the same lattice.
    pub fn combine(&self, a: f64, other: &TermSum, b: f64) -> Result<TermSum> {
        if self.lattice != other.lattice {
            return Err(Error::invalid("cannot add Hamiltonians on different lattices"));
        }
        let terms = self
            .terms
            .iter()
            .map(|t| t.map_matrix(|m| m * a))
            .chain(other.terms.iter().map(|t| t.map_matrix(|m| m * b)));
        Ok(TermSum::from_terms(self.lattice.clone(), terms))
    }

    /// Sparse matrix over `indexer`; a sector indexer yields the sector block.
    pub fn to_csr(&self, indexer: &BasisIndexer) -> Csr {
        let mut t = Vec::new();
        for term in &self.terms {
            term.push_triplets(indexer, C64::new(1.0, 0.0), &mut t);
        }
        Csr::from_triplets(indexer.dim(), indexer.dim(), t)
    }

    pub fn to_dense(&self, indexer: &BasisIndexer) -> Array2<C64> {
        self.to_csr(indexer).to_dense()
    }

    /// True when every term maps states of charge `q` to states of charge `q`
    /// (or of equal parity for parity charges).
    pub fn conserves(&self, charge: &ChargeSpec) -> bool {
        self.terms.iter().all(|t| {
            let q: Vec<i64> = (0..t.matrix().nrows())
                .map(|l| t.local_digits(l).iter().zip(t.sites()).map(|(&d, &s)| charge.local(s)[d]).sum())
                .collect();
            t.matrix().indexed_iter().all(|((r, c), v)| {
                v.norm() == 0.0
                    || match charge.conservation() {
                        Conservation::U1 => q[r] == q[c],
                        Conservation::Parity => (q[r] - q[c]).rem_euclid(2) == 0,
                    }
            })
        })
    }

    /// Term supports translated by one step reproduce the term list.
    pub fn is_translation_invariant(&self) -> bool {
        let lat = &self.lattice;
        if lat.cycle_period().is_none() {
            return false;
        }
        self.terms.iter().all(|t| {
            let image: Vec<usize> = t.sites().iter().map(|&s| lat.translate(s).expect("periodic")).collect();
            let mut sorted = image.clone();
            sorted.sort_unstable();
            let Some(other) = self.terms.iter().find(|u| u.sites() == sorted.as_slice()) else {
                return false;
            };
            let moved = LocalTerm::new(t.matrix().clone(), &image, lat).expect("valid term");
            crate::linalg::max_abs_diff(moved.matrix(), other.matrix()) <= 1e-13 * (1.0 + moved.norm().unwrap_or(0.0))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eigvalsh, kron};
    use crate::spin::{heisenberg_bond, pauli, spin_matrices};

    #[test]
    fn rejects_non_hermitian_terms() {
        let lat = Lattice::cycle(4, 2).unwrap();
        let mut h = TermSum::new(lat);
        let (sx, sy, _) = spin_matrices(0.5).unwrap();
        assert!(h.add(sx.dot(&sy), &[0]).is_err());
    }

    #[test]
    fn equal_supports_merge() {
        let lat = Lattice::cycle(4, 2).unwrap();
        let mut h = TermSum::new(lat);
        let b = heisenberg_bond(0.5).unwrap();
        h.add(b.clone(), &[0, 1]).unwrap();
        h.add(b.clone(), &[1, 0]).unwrap();
        assert_eq!(h.len(), 1);
        assert!((h.terms()[0].norm().unwrap() - 1.5).abs() < 1e-14);
    }

    #[test]
    fn identity_pieces_are_dropped_from_supports() {
        let lat = Lattice::cycle(3, 2).unwrap();
        let mut h = TermSum::new(lat);
        let (_, _, z) = pauli();
        h.add(kron(&z, &crate::linalg::identity(2)), &[0, 1]).unwrap();
        assert_eq!(h.terms()[0].sites(), &[0]);
    }

    #[test]
    fn product_model_spectrum() {
        let lat = Lattice::cycle(4, 2).unwrap();
        let mut h = TermSum::new(lat.clone());
        let (_, _, z) = pauli();
        for i in 0..4 {
            h.add(-z.clone(), &[i]).unwrap();
        }
        let b = BasisIndexer::full(lat.local_dims()).unwrap();
        let w = eigvalsh(&h.to_dense(&b)).unwrap();
        assert!((w[0] + 4.0).abs() < 1e-14 && (w[1] + 2.0).abs() < 1e-14);
        assert!(h.is_translation_invariant());
    }
}
