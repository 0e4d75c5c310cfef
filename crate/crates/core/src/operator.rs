//! Local operators: small dense matrices on a few sites and their
//! embeddings into the full or sector-restricted Hilbert space.

use ndarray::Array2;

use crate::basis::BasisIndexer;
use crate::charge::ChargeSpec;
use crate::error::{Error, Result};
use crate::lanczos;
use crate::lattice::Lattice;
use crate::linalg::{dense_norm, C64, ZERO};
use crate::sparse::Csr;

/// Matrices at or above this dimension use iterative norms and eigensolvers.
pub const DENSE_THRESHOLD: usize = 4096;

/// A dense matrix acting on an ordered list of sites.
///
/// Invariant: `sites` is strictly increasing and the matrix acts
/// nontrivially on each of them; its basis is lexicographic over `sites`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalTerm {
    sites: Vec<usize>,
    dims: Vec<usize>,
    matrix: Array2<C64>,
}

impl LocalTerm {
    /// Validates dimensions, sorts the sites and drops identity factors.
    pub fn new(matrix: Array2<C64>, sites: &[usize], lattice: &Lattice) -> Result<Self> {
        let n = lattice.n_sites();
        if let Some(&s) = sites.iter().find(|&&s| s >= n) {
            return Err(Error::invalid(format!("site {s} outside a lattice of {n} sites")));
        }
        let mut sorted = sites.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != sites.len() {
            return Err(Error::invalid("repeated site in operator support"));
        }
        let dims: Vec<usize> = sites.iter().map(|&s| lattice.local_dim(s)).collect();
        let d: usize = dims.iter().product();
        if matrix.dim() != (d, d) {
            return Err(Error::invalid(format!(
                "matrix of shape {:?} does not match local dimension {d} of sites {sites:?}",
                matrix.dim()
            )));
        }
        let mut t = LocalTerm { sites: sites.to_vec(), dims, matrix };
        t.sort_sites();
        t.minimize();
        Ok(t)
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    /// Operator norm; equal to the norm of the full-space embedding.
    pub fn norm(&self) -> Result<f64> {
        dense_norm(&self.matrix)
    }

    pub fn map_matrix(&self, f: impl FnOnce(&Array2<C64>) -> Array2<C64>) -> LocalTerm {
        let mut t = LocalTerm { sites: self.sites.clone(), dims: self.dims.clone(), matrix: f(&self.matrix) };
        t.minimize();
        t
    }

    fn local_strides(dims: &[usize]) -> Vec<usize> {
        let mut s = vec![1usize; dims.len()];
        for k in (0..dims.len().saturating_sub(1)).rev() {
            s[k] = s[k + 1] * dims[k + 1];
        }
        s
    }

    /// Local basis digits of local index `l`.
    pub fn local_digits(&self, l: usize) -> Vec<usize> {
        let st = Self::local_strides(&self.dims);
        st.iter().zip(&self.dims).map(|(s, d)| (l / s) % d).collect()
    }

    fn sort_sites(&mut self) {
        let mut order: Vec<usize> = (0..self.sites.len()).collect();
        order.sort_by_key(|&k| self.sites[k]);
        if order.iter().enumerate().all(|(a, &b)| a == b) {
            return;
        }
        let old_st = Self::local_strides(&self.dims);
        let new_dims: Vec<usize> = order.iter().map(|&k| self.dims[k]).collect();
        let new_st = Self::local_strides(&new_dims);
        let d = self.matrix.nrows();
        let remap = |l: usize| -> usize {
            order
                .iter()
                .enumerate()
                .map(|(pos, &k)| ((l / old_st[k]) % self.dims[k]) * new_st[pos])
                .sum()
        };
        let perm: Vec<usize> = (0..d).map(remap).collect();
        let mut m = Array2::zeros((d, d));
        for ((r, c), &v) in self.matrix.indexed_iter() {
            m[[perm[r], perm[c]]] = v;
        }
        self.sites = order.iter().map(|&k| self.sites[k]).collect();
        self.dims = new_dims;
        self.matrix = m;
    }

    /// Removes sites on which the matrix factorizes as identity.
    fn minimize(&mut self) {
        let scale = self.matrix.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        let tol = 1e-14 * scale.max(1e-300);
        let mut j = 0;
        while j < self.sites.len() {
            match self.reduce_site(j, tol) {
                Some(reduced) => {
                    self.matrix = reduced;
                    self.sites.remove(j);
                    self.dims.remove(j);
                }
                None => j += 1,
            }
        }
    }

    /// Partial trace over position `j` if the matrix is identity there.
    fn reduce_site(&self, j: usize, tol: f64) -> Option<Array2<C64>> {
        let dj = self.dims[j];
        let st = Self::local_strides(&self.dims);
        let mut rdims = self.dims.clone();
        rdims.remove(j);
        let rst = Self::local_strides(&rdims);
        let rd: usize = rdims.iter().product();
        // Full index from reduced index `x` and site-j digit `a`.
        let lift = |x: usize, a: usize| -> usize {
            let mut full = a * st[j];
            for (p, (&d, &s)) in rdims.iter().zip(&rst).enumerate() {
                let pos = if p < j { p } else { p + 1 };
                full += ((x / s) % d) * st[pos];
            }
            full
        };
        let mut reduced = Array2::zeros((rd, rd));
        for x in 0..rd {
            for y in 0..rd {
                let mut s = ZERO;
                for a in 0..dj {
                    s += self.matrix[[lift(x, a), lift(y, a)]];
                }
                reduced[[x, y]] = s / dj as f64;
            }
        }
        for x in 0..rd {
            for y in 0..rd {
                for a in 0..dj {
                    for b in 0..dj {
                        let expect = if a == b { reduced[[x, y]] } else { ZERO };
                        if (self.matrix[[lift(x, a), lift(y, b)]] - expect).norm() > tol {
                            return None;
                        }
                    }
                }
            }
        }
        Some(reduced)
    }

    /// Appends `scale * embed(self)` as triplets over `indexer`.
    ///
    /// Entries leaving a sector domain are dropped, so the result is the
    /// block of the operator on that sector.
    pub fn push_triplets(&self, indexer: &BasisIndexer, scale: C64, out: &mut Vec<(usize, usize, C64)>) {
        let ld = self.matrix.nrows();
        let lst = Self::local_strides(&self.dims);
        let offsets: Vec<usize> = (0..ld)
            .map(|l| {
                self.sites
                    .iter()
                    .enumerate()
                    .map(|(p, &s)| ((l / lst[p]) % self.dims[p]) * indexer.stride(s))
                    .sum()
            })
            .collect();
        let nz: Vec<Vec<(usize, C64)>> = (0..ld)
            .map(|c| {
                (0..ld)
                    .filter_map(|r| {
                        let v = self.matrix[[r, c]];
                        (v != ZERO).then_some((r, v * scale))
                    })
                    .collect()
            })
            .collect();
        for col in 0..indexer.dim() {
            let config = indexer.config(col);
            let mut l = 0;
            let mut base = config;
            for (p, &s) in self.sites.iter().enumerate() {
                let dgt = indexer.digit(config, s);
                l += dgt * lst[p];
                base -= dgt * indexer.stride(s);
            }
            for &(r, v) in &nz[l] {
                if let Some(row) = indexer.index(base + offsets[r]) {
                    out.push((row, col, v));
                }
            }
        }
    }

    pub fn embed(&self, indexer: &BasisIndexer) -> LocalOperator {
        let mut t = Vec::new();
        self.push_triplets(indexer, C64::new(1.0, 0.0), &mut t);
        LocalOperator {
            matrix: Csr::from_triplets(indexer.dim(), indexer.dim(), t),
            support: self.sites.clone(),
        }
    }
}

/// A sparse matrix on the (possibly sector-restricted) Hilbert space plus
/// the set of sites on which it acts nontrivially.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalOperator {
    pub matrix: Csr,
    pub support: Vec<usize>,
}

impl LocalOperator {
    pub fn new(matrix: Csr, mut support: Vec<usize>) -> Self {
        support.sort_unstable();
        support.dedup();
        LocalOperator { matrix, support }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn norm(&self) -> Result<f64> {
        op_norm(&self.matrix)
    }

    pub fn mul(&self, other: &LocalOperator) -> LocalOperator {
        LocalOperator::new(self.matrix.mul(&other.matrix), union(&self.support, &other.support))
    }

    pub fn commutator(&self, other: &LocalOperator) -> LocalOperator {
        LocalOperator::new(self.matrix.commutator(&other.matrix), union(&self.support, &other.support))
    }

    pub fn adjoint(&self) -> LocalOperator {
        LocalOperator { matrix: self.matrix.adjoint(), support: self.support.clone() }
    }
}

fn union(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut u: Vec<usize> = a.iter().chain(b).copied().collect();
    u.sort_unstable();
    u.dedup();
    u
}

/// Embeds `op` acting on `sites` into the space described by `indexer`.
pub fn embed(op: &Array2<C64>, sites: &[usize], lattice: &Lattice, indexer: &BasisIndexer) -> Result<LocalOperator> {
    if indexer.dims() != lattice.local_dims() {
        return Err(Error::invalid("indexer does not match the lattice"));
    }
    Ok(LocalTerm::new(op.clone(), sites, lattice)?.embed(indexer))
}

/// Largest singular value, dense below [`DENSE_THRESHOLD`] and by Lanczos on
/// the Gram operator above it.
pub fn op_norm(m: &Csr) -> Result<f64> {
    if m.nrows() == 0 || m.ncols() == 0 || m.is_zero() {
        return Ok(0.0);
    }
    if m.nrows().max(m.ncols()) < DENSE_THRESHOLD {
        return dense_norm(&m.to_dense());
    }
    let adj = m.adjoint();
    let n = m.ncols();
    let mut tmp = vec![ZERO; m.nrows()];
    let opts = lanczos::Options { tol: 1e-12, ..lanczos::Options::default() };
    let top = lanczos::largest(
        n,
        |x, y| {
            m.matvec_into(x, &mut tmp);
            adj.matvec_into(&tmp, y);
        },
        &opts,
    )?;
    Ok(top.max(0.0).sqrt())
}

/// Translation `T` mapping the content of site `(i, v)` to `(i + 1, v)`.
pub fn translation_operator(lattice: &Lattice, indexer: &BasisIndexer) -> Result<LocalOperator> {
    let n = lattice.n_sites();
    let image: Vec<usize> = (0..n).map(|k| lattice.translate(k)).collect::<Result<_>>()?;
    if indexer.dims() != lattice.local_dims() {
        return Err(Error::invalid("indexer does not match the lattice"));
    }
    let mut t = Vec::with_capacity(indexer.dim());
    for col in 0..indexer.dim() {
        let config = indexer.config(col);
        let mut out = 0;
        for (k, &tk) in image.iter().enumerate() {
            out += indexer.digit(config, k) * indexer.stride(tk);
        }
        let row = indexer
            .index(out)
            .ok_or_else(|| Error::invalid("translation does not preserve the charge sector"))?;
        t.push((row, col, C64::new(1.0, 0.0)));
    }
    Ok(LocalOperator::new(Csr::from_triplets(indexer.dim(), indexer.dim(), t), (0..n).collect()))
}

/// Diagonal of `Σ_k w_k q_k` over the basis of `indexer`.
pub fn weighted_charge_diagonal(indexer: &BasisIndexer, charge: &ChargeSpec, weights: &[f64]) -> Vec<f64> {
    (0..indexer.dim())
        .map(|k| {
            let c = indexer.config(k);
            weights
                .iter()
                .enumerate()
                .filter(|(_, &w)| w != 0.0)
                .map(|(s, &w)| w * charge.local(s)[indexer.digit(c, s)] as f64)
                .sum()
        })
        .collect()
}

/// Sparse diagonal operator from real entries.
pub fn diagonal(values: &[f64]) -> Csr {
    let t = values.iter().enumerate().map(|(k, &v)| (k, k, C64::new(v, 0.0))).collect();
    Csr::from_triplets(values.len(), values.len(), t)
}
