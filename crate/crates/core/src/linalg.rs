//! Dense kernels backed by LAPACK and CBLAS.
//!
//! Matrices are `ndarray` row-major arrays; conversions to the column-major
//! layout expected by LAPACK happen at the boundary.

use ndarray::{Array1, Array2, ArrayView1, ArrayViewMut1, ShapeBuilder};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Eigendecomposition of a Hermitian matrix.
///
/// `values` ascend; column `k` of `vectors` is the eigenvector of `values[k]`
/// with its largest-magnitude component real and positive.
#[derive(Debug, Clone)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: Array2<C64>,
}

fn col_major_complex(a: &Array2<C64>) -> Vec<C64> {
    a.t().iter().copied().collect()
}

/// True when every imaginary part is exactly zero.
pub fn is_real(a: &Array2<C64>) -> bool {
    a.iter().all(|z| z.im == 0.0)
}

fn dsyevd(jobz: u8, n: usize, buf: &mut [f64]) -> Result<Vec<f64>> {
    let ni = n as i32;
    let mut w = vec![0.0; n];
    let mut info = 0;
    let mut wq = 0.0;
    let mut iwq = 0;
    let jobz = [jobz];
    unsafe {
        lapack_sys::dsyevd_(
            jobz.as_ptr() as _,
            b"U".as_ptr() as _,
            &ni,
            buf.as_mut_ptr(),
            &ni.max(1),
            w.as_mut_ptr(),
            &mut wq,
            &-1,
            &mut iwq,
            &-1,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack { routine: "dsyevd", info });
    }
    let lwork = wq as i32;
    let liwork = iwq;
    let mut work = vec![0.0; lwork.max(1) as usize];
    let mut iwork = vec![0i32; liwork.max(1) as usize];
    unsafe {
        lapack_sys::dsyevd_(
            jobz.as_ptr() as _,
            b"U".as_ptr() as _,
            &ni,
            buf.as_mut_ptr(),
            &ni.max(1),
            w.as_mut_ptr(),
            work.as_mut_ptr(),
            &lwork,
            iwork.as_mut_ptr(),
            &liwork,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack { routine: "dsyevd", info });
    }
    Ok(w)
}

fn zheevd(jobz: u8, n: usize, buf: &mut [C64]) -> Result<Vec<f64>> {
    let ni = n as i32;
    let mut w = vec![0.0; n];
    let mut info = 0;
    let mut wq = ZERO;
    let mut rwq = 0.0;
    let mut iwq = 0;
    let jobz = [jobz];
    let a = buf.as_mut_ptr() as *mut lapack_sys::__BindgenComplex<f64>;
    unsafe {
        lapack_sys::zheevd_(
            jobz.as_ptr() as _,
            b"U".as_ptr() as _,
            &ni,
            a,
            &ni.max(1),
            w.as_mut_ptr(),
            &mut wq as *mut C64 as *mut lapack_sys::__BindgenComplex<f64>,
            &-1,
            &mut rwq,
            &-1,
            &mut iwq,
            &-1,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack { routine: "zheevd", info });
    }
    let lwork = wq.re as i32;
    let lrwork = rwq as i32;
    let liwork = iwq;
    let mut work = vec![ZERO; lwork.max(1) as usize];
    let mut rwork = vec![0.0; lrwork.max(1) as usize];
    let mut iwork = vec![0i32; liwork.max(1) as usize];
    unsafe {
        lapack_sys::zheevd_(
            jobz.as_ptr() as _,
            b"U".as_ptr() as _,
            &ni,
            a,
            &ni.max(1),
            w.as_mut_ptr(),
            work.as_mut_ptr() as *mut lapack_sys::__BindgenComplex<f64>,
            &lwork,
            rwork.as_mut_ptr(),
            &lrwork,
            iwork.as_mut_ptr(),
            &liwork,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack { routine: "zheevd", info });
    }
    Ok(w)
}

/// Full eigendecomposition of a real symmetric matrix.
pub fn eigh_real(a: &Array2<f64>) -> Result<(Vec<f64>, Array2<f64>)> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::invalid("eigh requires a square matrix"));
    }
    let mut buf: Vec<f64> = a.t().iter().copied().collect();
    let w = dsyevd(b'V', n, &mut buf)?;
    let v = Array2::from_shape_vec((n, n).f(), buf).expect("shape");
    Ok((w, v.as_standard_layout().into_owned()))
}

/// Full eigendecomposition of a Hermitian matrix; only the upper triangle is read.
pub fn eigh(a: &Array2<C64>) -> Result<Eigh> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::invalid("eigh requires a square matrix"));
    }
    let (values, mut vectors) = if is_real(a) {
        let (w, v) = eigh_real(&a.mapv(|z| z.re))?;
        (w, v.mapv(|x| C64::new(x, 0.0)))
    } else {
        let mut buf = col_major_complex(a);
        let w = zheevd(b'V', n, &mut buf)?;
        let v = Array2::from_shape_vec((n, n).f(), buf).expect("shape");
        (w, v.as_standard_layout().into_owned())
    };
    fix_phases(&mut vectors);
    Ok(Eigh { values, vectors })
}

/// Ascending eigenvalues of a Hermitian matrix.
pub fn eigvalsh(a: &Array2<C64>) -> Result<Vec<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::invalid("eigvalsh requires a square matrix"));
    }
    if is_real(a) {
        let mut buf: Vec<f64> = a.t().iter().map(|z| z.re).collect();
        dsyevd(b'N', n, &mut buf)
    } else {
        let mut buf = col_major_complex(a);
        zheevd(b'N', n, &mut buf)
    }
}

/// Singular values in descending order.
pub fn singular_values(a: &Array2<C64>) -> Result<Vec<f64>> {
    let (m, n) = a.dim();
    let k = m.min(n);
    if k == 0 {
        return Ok(Vec::new());
    }
    let mut buf = col_major_complex(a);
    let (mi, ni) = (m as i32, n as i32);
    let mut s = vec![0.0; k];
    let mut info = 0;
    let mut wq = ZERO;
    let mut rwork = vec![0.0; 7 * k.max(1)];
    let mut iwork = vec![0i32; 8 * k];
    let mut dummy = ZERO;
    let ap = buf.as_mut_ptr() as *mut lapack_sys::__BindgenComplex<f64>;
    let dp = &mut dummy as *mut C64 as *mut lapack_sys::__BindgenComplex<f64>;
    unsafe {
        lapack_sys::zgesdd_(
            b"N".as_ptr() as _,
            &mi,
            &ni,
            ap,
            &mi,
            s.as_mut_ptr(),
            dp,
            &1,
            dp,
            &1,
            &mut wq as *mut C64 as *mut lapack_sys::__BindgenComplex<f64>,
            &-1,
            rwork.as_mut_ptr(),
            iwork.as_mut_ptr(),
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack { routine: "zgesdd", info });
    }
    let lwork = wq.re as i32;
    let mut work = vec![ZERO; lwork.max(1) as usize];
    unsafe {
        lapack_sys::zgesdd_(
            b"N".as_ptr() as _,
            &mi,
            &ni,
            ap,
            &mi,
            s.as_mut_ptr(),
            dp,
            &1,
            dp,
            &1,
            work.as_mut_ptr() as *mut lapack_sys::__BindgenComplex<f64>,
            &lwork,
            rwork.as_mut_ptr(),
            iwork.as_mut_ptr(),
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack { routine: "zgesdd", info });
    }
    Ok(s)
}

fn max_abs(a: &Array2<C64>) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

/// `max |a_ij - conj(a_ji)|`.
pub fn hermiticity_defect(a: &Array2<C64>) -> f64 {
    let n = a.nrows();
    let mut d: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            d = d.max((a[[i, j]] - a[[j, i]].conj()).norm());
        }
    }
    d
}

/// `max |a_ij + conj(a_ji)|`.
pub fn anti_hermiticity_defect(a: &Array2<C64>) -> f64 {
    let n = a.nrows();
    let mut d: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            d = d.max((a[[i, j]] + a[[j, i]].conj()).norm());
        }
    }
    d
}

/// Operator norm (largest singular value) of a dense matrix.
///
/// Hermitian and anti-Hermitian inputs go through the eigenvalue solver,
/// everything else through an SVD.
pub fn dense_norm(a: &Array2<C64>) -> Result<f64> {
    if a.is_empty() {
        return Ok(0.0);
    }
    let scale = max_abs(a);
    if scale == 0.0 {
        return Ok(0.0);
    }
    if a.nrows() == a.ncols() {
        let tol = 1e-14 * scale;
        if hermiticity_defect(a) <= tol {
            let w = eigvalsh(a)?;
            return Ok(w[0].abs().max(w[w.len() - 1].abs()));
        }
        if anti_hermiticity_defect(a) <= tol {
            let w = eigvalsh(&a.mapv(|z| z * I))?;
            return Ok(w[0].abs().max(w[w.len() - 1].abs()));
        }
    }
    Ok(singular_values(a)?[0])
}

fn op_of(adj: bool) -> cblas_sys::CBLAS_TRANSPOSE {
    if adj {
        cblas_sys::CblasConjTrans
    } else {
        cblas_sys::CblasNoTrans
    }
}

/// `op(a) * op(b)` where `op` is the adjoint when the flag is set.
pub fn gemm(a: &Array2<C64>, adj_a: bool, b: &Array2<C64>, adj_b: bool) -> Array2<C64> {
    let a = a.as_standard_layout();
    let b = b.as_standard_layout();
    let (m, ka) = if adj_a { (a.ncols(), a.nrows()) } else { a.dim() };
    let (kb, n) = if adj_b { (b.ncols(), b.nrows()) } else { b.dim() };
    assert_eq!(ka, kb, "gemm inner dimension mismatch");
    let mut c = Array2::<C64>::zeros((m, n));
    if m == 0 || n == 0 || ka == 0 {
        return c;
    }
    let alpha = [1.0, 0.0];
    let beta = [0.0, 0.0];
    unsafe {
        cblas_sys::cblas_zgemm(
            cblas_sys::CblasRowMajor,
            op_of(adj_a),
            op_of(adj_b),
            m as i32,
            n as i32,
            ka as i32,
            &alpha,
            a.as_ptr() as *const _,
            a.ncols() as i32,
            b.as_ptr() as *const _,
            b.ncols() as i32,
            &beta,
            c.as_mut_ptr() as *mut _,
            n as i32,
        );
    }
    c
}

pub fn matmul(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    gemm(a, false, b, false)
}

/// `op(a) * x`.
pub fn gemv(a: &Array2<C64>, adj: bool, x: ArrayView1<C64>) -> Array1<C64> {
    let a = a.as_standard_layout();
    let x = x.as_standard_layout();
    let (rows, cols) = a.dim();
    let out = if adj { cols } else { rows };
    assert_eq!(x.len(), if adj { rows } else { cols }, "gemv dimension mismatch");
    let mut y = Array1::<C64>::zeros(out);
    if rows == 0 || cols == 0 {
        return y;
    }
    let alpha = [1.0, 0.0];
    let beta = [0.0, 0.0];
    unsafe {
        cblas_sys::cblas_zgemv(
            cblas_sys::CblasRowMajor,
            op_of(adj),
            rows as i32,
            cols as i32,
            &alpha,
            a.as_ptr() as *const _,
            cols as i32,
            x.as_ptr() as *const _,
            1,
            &beta,
            y.as_mut_ptr() as *mut _,
            1,
        );
    }
    y
}

pub fn adjoint(a: &Array2<C64>) -> Array2<C64> {
    a.t().mapv(|z| z.conj())
}

/// `a b - b a`.
pub fn commutator(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    matmul(a, b) - matmul(b, a)
}

/// `v diag(d) v†` for a matrix `v` with eigenvector columns.
pub fn from_eigen(values: &[C64], v: &Array2<C64>) -> Array2<C64> {
    let mut w = v.clone();
    for (mut col, &d) in w.columns_mut().into_iter().zip(values) {
        col.mapv_inplace(|z| z * d);
    }
    gemm(&w, false, v, true)
}

/// `exp(i t h)` for Hermitian `h`.
pub fn exp_i_hermitian(h: &Array2<C64>, t: f64) -> Result<Array2<C64>> {
    let e = eigh(h)?;
    let d: Vec<C64> = e.values.iter().map(|&l| C64::from_polar(1.0, t * l)).collect();
    Ok(from_eigen(&d, &e.vectors))
}

/// `Σ conj(a_i) b_i`.
pub fn vdot(a: ArrayView1<C64>, b: ArrayView1<C64>) -> C64 {
    a.iter().zip(b.iter()).fold(ZERO, |s, (x, y)| s + x.conj() * y)
}

pub fn norm(a: ArrayView1<C64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Rotates `v` so that its largest-magnitude component is real and positive.
///
/// Among components within a relative `1e-10` of the maximum the first wins.
pub fn fix_phase(mut v: ArrayViewMut1<C64>) {
    let m = v.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    if m == 0.0 {
        return;
    }
    let p = v.iter().position(|z| z.norm() >= m * (1.0 - 1e-10)).expect("nonempty");
    let r = v[p].conj() / v[p].norm();
    v.mapv_inplace(|z| z * r);
}

pub fn fix_phases(v: &mut Array2<C64>) {
    for col in v.columns_mut() {
        fix_phase(col);
    }
}

pub fn max_abs_diff(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    assert_eq!(a.dim(), b.dim());
    a.iter().zip(b.iter()).fold(0.0, |m, (x, y)| m.max((x - y).norm()))
}

/// Checks a double-precision BLAS product against a naive loop.
///
/// Some OpenBLAS builds pick kernels on AVX-512 hosts that silently return
/// wrong results; callers can detect this and select `OPENBLAS_CORETYPE`.
pub fn blas_self_test() -> bool {
    let n = 160;
    let a = Array2::from_shape_fn((n, n), |(i, j)| C64::new(((i * 7 + j * 3) % 11) as f64, 0.0));
    let b = Array2::from_shape_fn((n, n), |(i, j)| C64::new(((i * 5 + j * 2) % 13) as f64, 0.0));
    let Ok(e) = eigh_real(&(&a + &a.t()).mapv(|z| z.re)) else {
        return false;
    };
    let v = &e.1;
    let recon = v.dot(&Array2::from_diag(&Array1::from_vec(e.0.clone()))).dot(&v.t());
    let sym = (&a + &a.t()).mapv(|z| z.re);
    let eig_ok = recon.iter().zip(sym.iter()).all(|(x, y)| (x - y).abs() < 1e-8);
    eig_ok && max_abs_diff(&matmul(&a, &b), &a.dot(&b)) < 1e-9
}

pub fn identity(n: usize) -> Array2<C64> {
    Array2::from_diag_elem(n, ONE)
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::<C64>::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let s = a[[i, j]];
            if s == ZERO {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[[i * br + k, j * bc + l]] = s * b[[k, l]];
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn eigh_reconstructs_complex_matrix() {
        let a = array![
            [c(2.0, 0.0), c(0.0, 1.0), c(1.0, -0.5)],
            [c(0.0, -1.0), c(1.0, 0.0), c(0.3, 0.0)],
            [c(1.0, 0.5), c(0.3, 0.0), c(-1.0, 0.0)]
        ];
        let e = eigh(&a).unwrap();
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        let d: Vec<C64> = e.values.iter().map(|&x| c(x, 0.0)).collect();
        assert!(max_abs_diff(&from_eigen(&d, &e.vectors), &a) < 1e-12);
        for col in e.vectors.columns() {
            let p = col.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let lead = col.iter().find(|z| z.norm() >= p * (1.0 - 1e-10)).unwrap();
            assert!(lead.im.abs() < 1e-14 && lead.re > 0.0);
        }
    }

    #[test]
    fn real_path_matches_complex_path() {
        let a = array![[c(1.0, 0.0), c(2.0, 0.0)], [c(2.0, 0.0), c(-3.0, 0.0)]];
        let w = eigvalsh(&a).unwrap();
        let tr = -2.0f64;
        let det = -3.0 - 4.0;
        let disc = (tr * tr - 4.0 * det).sqrt();
        assert!((w[0] - (tr - disc) / 2.0).abs() < 1e-13);
        assert!((w[1] - (tr + disc) / 2.0).abs() < 1e-13);
    }

    #[test]
    fn norms_of_structured_matrices() {
        let herm = array![[c(0.0, 0.0), c(0.5, 0.0)], [c(0.5, 0.0), c(0.0, 0.0)]];
        assert!((dense_norm(&herm).unwrap() - 0.5).abs() < 1e-14);
        let anti = herm.mapv(|z| z * I);
        assert!((dense_norm(&anti).unwrap() - 0.5).abs() < 1e-14);
        let nilpotent = array![[ZERO, c(3.0, 0.0)], [ZERO, ZERO]];
        assert!((dense_norm(&nilpotent).unwrap() - 3.0).abs() < 1e-13);
        assert_eq!(dense_norm(&Array2::zeros((3, 3))).unwrap(), 0.0);
    }

    #[test]
    fn gemm_matches_naive_product() {
        let a = array![[c(1.0, 1.0), c(2.0, 0.0), c(0.0, -1.0)], [c(0.5, 0.0), c(0.0, 0.0), c(1.0, 2.0)]];
        let b = array![[c(1.0, 0.0), c(0.0, 1.0)], [c(2.0, -1.0), c(1.0, 0.0)], [c(0.0, 0.0), c(3.0, 0.0)]];
        let naive = a.dot(&b);
        assert!(max_abs_diff(&matmul(&a, &b), &naive) < 1e-14);
        let ah = adjoint(&a);
        assert!(max_abs_diff(&gemm(&ah, true, &b, false), &naive) < 1e-14);
        let x = array![c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.5)];
        let y = gemv(&a, false, x.view());
        assert!((y - a.dot(&x)).iter().all(|z| z.norm() < 1e-14));
        let z = gemv(&ah, true, x.view());
        assert!((z - a.dot(&x)).iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn exponential_is_unitary_and_periodic() {
        let sz = array![[c(0.5, 0.0), ZERO], [ZERO, c(-0.5, 0.0)]];
        let u = exp_i_hermitian(&sz, 0.7).unwrap();
        assert!((u[[0, 0]] - C64::from_polar(1.0, 0.35)).norm() < 1e-14);
        let uu = gemm(&u, true, &u, false);
        assert!(max_abs_diff(&uu, &identity(2)) < 1e-14);
    }

    #[test]
    fn blocked_kernels_are_correct() {
        assert!(blas_self_test());
        let n = 300;
        let a = Array2::from_shape_fn((n, n), |(i, j)| c((((i + j) * (i * j + 3)) % 17) as f64, 0.0));
        let e = eigh(&a).unwrap();
        let d: Vec<C64> = e.values.iter().map(|&x| c(x, 0.0)).collect();
        assert!(max_abs_diff(&from_eigen(&d, &e.vectors), &a) < 1e-9);
    }

    #[test]
    fn kron_of_diagonals() {
        let z = array![[ONE, ZERO], [ZERO, -ONE]];
        let k = kron(&z, &identity(2));
        let diag: Vec<f64> = k.diag().iter().map(|z| z.re).collect();
        assert_eq!(diag, vec![1.0, 1.0, -1.0, -1.0]);
    }
}
