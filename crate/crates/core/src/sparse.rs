//! Compressed-row complex sparse matrices.

use ndarray::{Array1, Array2, ArrayView1};

use crate::linalg::{C64, ZERO};

/// Compressed sparse row matrix with sorted column indices and no stored zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<C64>,
}

impl Csr {
    /// Compiles `(row, col, value)` triplets; duplicates are summed and exact zeros dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(usize, usize, C64)>) -> Self {
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut data: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        let mut row_of = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) outside {nrows}x{ncols}");
            if last == Some((r, c)) {
                *data.last_mut().expect("nonempty") += v;
            } else {
                indices.push(c);
                data.push(v);
                row_of.push(r);
                last = Some((r, c));
            }
        }
        let mut k = 0;
        for i in 0..data.len() {
            if data[i] != ZERO {
                indices[k] = indices[i];
                data[k] = data[i];
                row_of[k] = row_of[i];
                k += 1;
            }
        }
        indices.truncate(k);
        data.truncate(k);
        row_of.truncate(k);
        for &r in &row_of {
            indptr[r + 1] += 1;
        }
        for i in 0..nrows {
            indptr[i + 1] += indptr[i];
        }
        Csr { nrows, ncols, indptr, indices, data }
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Csr { nrows, ncols, indptr: vec![0; nrows + 1], indices: Vec::new(), data: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        Csr {
            nrows: n,
            ncols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            data: vec![C64::new(1.0, 0.0); n],
        }
    }

    /// Exact conversion; only nonzero entries are stored.
    pub fn from_dense(a: &Array2<C64>) -> Self {
        let (m, n) = a.dim();
        let mut t = Vec::new();
        for ((i, j), &v) in a.indexed_iter() {
            if v != ZERO {
                t.push((i, j, v));
            }
        }
        Csr::from_triplets(m, n, t)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn is_zero(&self) -> bool {
        self.data.is_empty()
    }

    /// Stored entries of row `i` as `(col, value)`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let r = self.indptr[i]..self.indptr[i + 1];
        self.indices[r.clone()].iter().copied().zip(self.data[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        let r = self.indptr[i]..self.indptr[i + 1];
        match self.indices[r.clone()].binary_search(&j) {
            Ok(k) => self.data[r.start + k],
            Err(_) => ZERO,
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn to_dense(&self) -> Array2<C64> {
        let mut a = Array2::zeros((self.nrows, self.ncols));
        for (i, j, v) in self.triplets() {
            a[[i, j]] = v;
        }
        a
    }

    /// `y = self * x` into a caller buffer.
    pub fn matvec_into(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = ZERO;
            for k in self.indptr[i]..self.indptr[i + 1] {
                s += self.data[k] * x[self.indices[k]];
            }
            *yi = s;
        }
    }

    pub fn matvec(&self, x: ArrayView1<C64>) -> Array1<C64> {
        let x = x.as_standard_layout();
        let mut y = Array1::zeros(self.nrows);
        self.matvec_into(x.as_slice().expect("contiguous"), y.as_slice_mut().expect("contiguous"));
        y
    }

    /// `self * b` for a dense right factor.
    pub fn mul_dense(&self, b: &Array2<C64>) -> Array2<C64> {
        assert_eq!(self.ncols, b.nrows());
        let mut out = Array2::zeros((self.nrows, b.ncols()));
        for i in 0..self.nrows {
            let mut orow = out.row_mut(i);
            for (j, v) in self.row(i) {
                orow.scaled_add(v, &b.row(j));
            }
        }
        out
    }

    /// Sparse product by row-wise accumulation.
    pub fn mul(&self, other: &Csr) -> Csr {
        assert_eq!(self.ncols, other.nrows, "dimension mismatch in sparse product");
        let mut acc = vec![ZERO; other.ncols];
        let mut mark = vec![usize::MAX; other.ncols];
        let mut indptr = vec![0usize; self.nrows + 1];
        let mut indices = Vec::new();
        let mut data = Vec::new();
        let mut cols = Vec::new();
        for i in 0..self.nrows {
            cols.clear();
            for (k, a) in self.row(i) {
                for (j, b) in other.row(k) {
                    if mark[j] != i {
                        mark[j] = i;
                        acc[j] = ZERO;
                        cols.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            cols.sort_unstable();
            for &j in &cols {
                if acc[j] != ZERO {
                    indices.push(j);
                    data.push(acc[j]);
                }
            }
            indptr[i + 1] = indices.len();
        }
        Csr { nrows: self.nrows, ncols: other.ncols, indptr, indices, data }
    }

    /// `alpha * self + beta * other`.
    pub fn lincomb(&self, alpha: C64, other: &Csr, beta: C64) -> Csr {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let t = self
            .triplets()
            .map(|(i, j, v)| (i, j, alpha * v))
            .chain(other.triplets().map(|(i, j, v)| (i, j, beta * v)))
            .collect();
        Csr::from_triplets(self.nrows, self.ncols, t)
    }

    pub fn add(&self, other: &Csr) -> Csr {
        self.lincomb(C64::new(1.0, 0.0), other, C64::new(1.0, 0.0))
    }

    pub fn sub(&self, other: &Csr) -> Csr {
        self.lincomb(C64::new(1.0, 0.0), other, C64::new(-1.0, 0.0))
    }

    pub fn scale(&self, s: C64) -> Csr {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= s);
        out.retain_nonzero();
        out
    }

    fn retain_nonzero(&mut self) {
        if self.data.iter().all(|&v| v != ZERO) {
            return;
        }
        let t = self.triplets().collect();
        *self = Csr::from_triplets(self.nrows, self.ncols, t);
    }

    pub fn adjoint(&self) -> Csr {
        let t = self.triplets().map(|(i, j, v)| (j, i, v.conj())).collect();
        Csr::from_triplets(self.ncols, self.nrows, t)
    }

    /// `self * other - other * self`.
    pub fn commutator(&self, other: &Csr) -> Csr {
        self.mul(other).sub(&other.mul(self))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn max_abs_diff(&self, other: &Csr) -> f64 {
        self.sub(other).max_abs()
    }

    /// Entrywise Hermiticity defect `max |a_ij - conj(a_ji)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        self.sub(&self.adjoint()).max_abs()
    }

    /// True when the matrix is a permutation matrix with unit entries.
    pub fn is_permutation(&self) -> bool {
        if self.nrows != self.ncols || self.nnz() != self.nrows {
            return false;
        }
        let mut seen = vec![false; self.ncols];
        for i in 0..self.nrows {
            if self.indptr[i + 1] - self.indptr[i] != 1 {
                return false;
            }
            let k = self.indptr[i];
            if self.data[k] != C64::new(1.0, 0.0) || std::mem::replace(&mut seen[self.indices[k]], true) {
                return false;
            }
        }
        true
    }

    /// Restriction to the given row and column index lists.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Csr {
        let mut col_pos = vec![usize::MAX; self.ncols];
        for (k, &c) in cols.iter().enumerate() {
            col_pos[c] = k;
        }
        let mut t = Vec::new();
        for (ri, &r) in rows.iter().enumerate() {
            for (j, v) in self.row(r) {
                if col_pos[j] != usize::MAX {
                    t.push((ri, col_pos[j], v));
                }
            }
        }
        Csr::from_triplets(rows.len(), cols.len(), t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn triplets_sum_duplicates_and_drop_zeros() {
        let m = Csr::from_triplets(
            2,
            3,
            vec![(1, 2, c(1.0, 0.0)), (0, 0, c(2.0, 0.0)), (1, 2, c(0.5, 1.0)), (0, 1, c(1.0, 0.0)), (0, 1, c(-1.0, 0.0))],
        );
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(1, 2), c(1.5, 1.0));
        assert_eq!(m.get(0, 1), ZERO);
    }

    #[test]
    fn permutation_detection() {
        let p = Csr::from_triplets(3, 3, vec![(0, 1, c(1.0, 0.0)), (1, 2, c(1.0, 0.0)), (2, 0, c(1.0, 0.0))]);
        assert!(p.is_permutation());
        assert_eq!(p.mul(&p.adjoint()), Csr::identity(3));
        let q = Csr::from_triplets(2, 2, vec![(0, 0, c(1.0, 0.0)), (1, 0, c(1.0, 0.0))]);
        assert!(!q.is_permutation());
    }

    fn dense_strategy(n: usize) -> impl Strategy<Value = Array2<C64>> {
        proptest::collection::vec((-2i32..=2, -2i32..=2, 0u8..3), n * n).prop_map(move |v| {
            Array2::from_shape_vec(
                (n, n),
                v.into_iter()
                    .map(|(a, b, keep)| if keep == 0 { c(a as f64, b as f64) } else { ZERO })
                    .collect(),
            )
            .unwrap()
        })
    }

    proptest! {
        #[test]
        fn sparse_algebra_matches_dense(a in dense_strategy(5), b in dense_strategy(5)) {
            let (sa, sb) = (Csr::from_dense(&a), Csr::from_dense(&b));
            prop_assert_eq!(sa.mul(&sb).to_dense(), a.dot(&b));
            prop_assert_eq!(sa.add(&sb).to_dense(), &a + &b);
            prop_assert_eq!(sa.adjoint().to_dense(), a.t().mapv(|z| z.conj()));
            prop_assert_eq!(sa.mul_dense(&b), a.dot(&b));
            let x = b.column(0).to_owned();
            prop_assert_eq!(sa.matvec(x.view()), a.dot(&x));
        }
    }
}
