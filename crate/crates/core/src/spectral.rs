//! Low-lying spectra, gaps, translation eigenvalues and spectral flow.

use std::io::Write;

use ndarray::{Array1, Array2};
use rayon::prelude::*;
use serde::Serialize;

use crate::basis::BasisIndexer;
use crate::charge::ChargeSpec;
use crate::error::{Error, Result};
use crate::lanczos;
use crate::linalg::{eigh, eigvalsh, gemm, vdot, C64};
use crate::models::TermSum;
use crate::operator::DENSE_THRESHOLD;
use crate::sparse::Csr;

#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Dimensions below this are diagonalized densely.
    pub dense_threshold: usize,
    pub lanczos: lanczos::Options,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { dense_threshold: DENSE_THRESHOLD, lanczos: lanczos::Options::default() }
    }
}

impl SolverOptions {
    pub fn with_seed(seed: u64) -> Self {
        let mut o = SolverOptions::default();
        o.lanczos.seed = seed;
        o
    }
}

/// The `k` lowest eigenpairs of a Hamiltonian block.
#[derive(Debug, Clone, Serialize)]
pub struct SpectralResult {
    pub energies: Vec<f64>,
    #[serde(skip)]
    pub states: Vec<Array1<C64>>,
    pub gap: f64,
    pub degenerate: bool,
    pub sector: Option<i64>,
    /// Upper bound on `|H|` used for the degeneracy tolerance.
    pub norm_bound: f64,
}

impl SpectralResult {
    fn assemble(energies: Vec<f64>, states: Vec<Array1<C64>>, norm_bound: f64, sector: Option<i64>) -> Self {
        let gap = if energies.len() > 1 { (energies[1] - energies[0]).max(0.0) } else { f64::INFINITY };
        let degenerate = gap < degeneracy_tolerance(norm_bound);
        SpectralResult { energies, states, gap, degenerate, sector, norm_bound }
    }

    pub fn ground(&self) -> &Array1<C64> {
        &self.states[0]
    }

    /// Number of returned levels within the degeneracy tolerance of `E_0`.
    pub fn ground_multiplicity(&self) -> usize {
        let tol = degeneracy_tolerance(self.norm_bound);
        self.energies.iter().take_while(|&&e| e - self.energies[0] < tol).count()
    }

    /// Writes the states as little-endian binary: `u64` dimension, `u64`
    /// count, then each state as interleaved `f64` real and imaginary parts.
    pub fn write_states(&self, mut w: impl Write) -> std::io::Result<()> {
        let dim = self.states.first().map_or(0, |s| s.len()) as u64;
        w.write_all(&dim.to_le_bytes())?;
        w.write_all(&(self.states.len() as u64).to_le_bytes())?;
        for s in &self.states {
            for z in s {
                w.write_all(&z.re.to_le_bytes())?;
                w.write_all(&z.im.to_le_bytes())?;
            }
        }
        Ok(())
    }
}

/// `1e-8 max(1, |H|)`.
pub fn degeneracy_tolerance(norm: f64) -> f64 {
    1e-8 * norm.max(1.0)
}

/// Largest absolute row sum, an upper bound on the operator norm of a Hermitian matrix.
pub fn row_sum_bound(m: &Csr) -> f64 {
    (0..m.nrows()).map(|i| m.row(i).map(|(_, v)| v.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// The `k` lowest eigenpairs of a Hermitian sparse matrix.
pub fn lowest_eigenpairs(m: &Csr, k: usize, opts: &SolverOptions) -> Result<SpectralResult> {
    let n = m.nrows();
    if k == 0 || k > n {
        return Err(Error::invalid(format!("cannot return {k} eigenpairs of a {n}-dimensional matrix")));
    }
    if n < opts.dense_threshold {
        let e = eigh(&m.to_dense())?;
        let norm = e.values[0].abs().max(e.values[n - 1].abs());
        let states = (0..k).map(|j| e.vectors.column(j).to_owned()).collect();
        Ok(SpectralResult::assemble(e.values[..k].to_vec(), states, norm, None))
    } else {
        let (w, v) = lanczos::lowest(n, |x, y| m.matvec_into(x, y), k, &opts.lanczos)?;
        let states = v
            .into_iter()
            .map(|s| {
                let mut a = Array1::from_vec(s);
                crate::linalg::fix_phase(a.view_mut());
                a
            })
            .collect();
        Ok(SpectralResult::assemble(w, states, row_sum_bound(m), None))
    }
}

/// The `k` lowest energies only.
pub fn lowest_energies(m: &Csr, k: usize, opts: &SolverOptions) -> Result<Vec<f64>> {
    let n = m.nrows();
    if k == 0 || k > n {
        return Err(Error::invalid(format!("cannot return {k} eigenvalues of a {n}-dimensional matrix")));
    }
    if n < opts.dense_threshold {
        Ok(eigvalsh(&m.to_dense())?[..k].to_vec())
    } else {
        Ok(lowest_eigenpairs(m, k, opts)?.energies)
    }
}

/// Basis for `h` over the full space or one charge sector.
pub fn indexer_for(h: &TermSum, sector: Option<(&ChargeSpec, i64)>) -> Result<BasisIndexer> {
    let dims = h.lattice().local_dims();
    match sector {
        None => BasisIndexer::full(dims),
        Some((charge, q)) => {
            if !h.conserves(charge) {
                return Err(Error::invalid("Hamiltonian does not conserve the requested charge"));
            }
            BasisIndexer::sector(dims, charge, q)
        }
    }
}

/// The `k >= 2` lowest eigenpairs of `h`, optionally within a charge sector.
pub fn ground_state(h: &TermSum, sector: Option<(&ChargeSpec, i64)>, k: usize, opts: &SolverOptions) -> Result<SpectralResult> {
    if k < 2 {
        return Err(Error::invalid("at least two levels are needed for a gap"));
    }
    let idx = indexer_for(h, sector)?;
    let mut r = lowest_eigenpairs(&h.to_csr(&idx), k, opts)?;
    r.sector = idx.target();
    Ok(r)
}

/// All eigenvalues and eigenvectors of a Hermitian sparse matrix, densely.
pub fn full_spectrum(m: &Csr) -> Result<crate::linalg::Eigh> {
    eigh(&m.to_dense())
}

/// `<ψ, T ψ>` normalized to unit modulus; requires `ψ` to be a `T` eigenvector.
pub fn translation_eigenvalue(psi: &Array1<C64>, t: &Csr) -> Result<C64> {
    let z = vdot(psi.view(), t.matvec(psi.view()).view());
    let nn = vdot(psi.view(), psi.view()).re;
    let overlap = z.norm() / nn;
    if overlap < 1.0 - 1e-8 {
        return Err(Error::NotAnEigenvector { overlap });
    }
    Ok(z / z.norm())
}

/// Rotates an orthonormal block of states into eigenvectors of a unitary
/// (or Hermitian) operator `u` that leaves the block invariant.
///
/// Returns the rotated states and their eigenvalues, sorted by eigenvalue
/// argument (or value) for reproducibility.
pub fn simultaneous_block_diagonalize(states: &[Array1<C64>], u: &Csr) -> Result<(Vec<Array1<C64>>, Vec<C64>)> {
    let q = states.len();
    if q == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    let n = states[0].len();
    let mut v = Array2::<C64>::zeros((n, q));
    for (j, s) in states.iter().enumerate() {
        v.column_mut(j).assign(s);
    }
    let uv = u.mul_dense(&v);
    let m = gemm(&v, true, &uv, false);
    let leak = (&uv - &crate::linalg::matmul(&v, &m)).iter().fold(0.0f64, |a, z| a.max(z.norm()));
    if leak > 1e-8 {
        return Err(Error::NotAnEigenvector { overlap: 1.0 - leak });
    }
    // A generic real combination of the Hermitian and anti-Hermitian parts
    // shares eigenvectors with the normal matrix `m` and separates them.
    let mh = crate::linalg::adjoint(&m);
    let eps = 0.371_904_216_5;
    let comb = (&m + &mh).mapv(|z| z * 0.5) + (&m - &mh).mapv(|z| z * C64::new(0.0, -0.5 * eps));
    let e = eigh(&comb)?;
    let rotated = crate::linalg::matmul(&v, &e.vectors);
    let mut out: Vec<(Array1<C64>, C64)> = (0..q)
        .map(|j| {
            let mut s = rotated.column(j).to_owned();
            crate::linalg::fix_phase(s.view_mut());
            let z = vdot(s.view(), u.matvec(s.view()).view());
            (s, z)
        })
        .collect();
    out.sort_by(|a, b| a.1.arg().total_cmp(&b.1.arg()).then(a.1.re.total_cmp(&b.1.re)));
    let (s, z): (Vec<_>, Vec<_>) = out.into_iter().unzip();
    Ok((s, z))
}

/// One grid point of a spectral flow.
#[derive(Debug, Clone, Serialize)]
pub struct FlowPoint {
    pub theta: f64,
    pub energies: Vec<f64>,
    pub gap: f64,
    /// `|<ψ_0(previous point), ψ_0(this point)>|`, absent at the first point.
    pub overlap_prev: Option<f64>,
}

/// Lowest `k` levels of a parametrized Hamiltonian along `grid`.
pub fn spectral_flow<F>(family: F, grid: &[f64], k: usize, opts: &SolverOptions) -> Result<Vec<FlowPoint>>
where
    F: Fn(f64) -> Result<Csr> + Sync,
{
    if let Some(&bad) = grid.iter().find(|&&t| !(0.0..=std::f64::consts::TAU + 1e-12).contains(&t)) {
        return Err(Error::invalid(format!("grid value {bad} outside [0, 2π]")));
    }
    let results: Vec<SpectralResult> = grid
        .par_iter()
        .map(|&t| lowest_eigenpairs(&family(t)?, k, opts))
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(grid.len());
    for (n, (r, &t)) in results.iter().zip(grid).enumerate() {
        let overlap_prev = (n > 0).then(|| vdot(results[n - 1].ground().view(), r.ground().view()).norm());
        out.push(FlowPoint { theta: t, energies: r.energies.clone(), gap: r.gap, overlap_prev });
    }
    Ok(out)
}

/// `|(1 - P) T P|` for the projector `P` onto an orthonormal block.
pub fn block_leakage(states: &[Array1<C64>], t: &Csr) -> Result<f64> {
    let n = states.first().map_or(0, |s| s.len());
    let mut v = Array2::<C64>::zeros((n, states.len()));
    for (j, s) in states.iter().enumerate() {
        v.column_mut(j).assign(s);
    }
    let tv = t.mul_dense(&v);
    let proj = crate::linalg::matmul(&v, &gemm(&v, true, &tv, false));
    let resid = &tv - &proj;
    let g = gemm(&resid, true, &resid, false);
    let w = eigvalsh(&g)?;
    Ok(w.last().copied().unwrap_or(0.0).max(0.0).sqrt())
}

/// `|H ψ - E ψ|` for one eigenpair.
pub fn residual(m: &Csr, e: f64, psi: &Array1<C64>) -> f64 {
    let hp = m.matvec(psi.view());
    hp.iter().zip(psi).map(|(a, b)| (a - b * e).norm_sqr()).sum::<f64>().sqrt()
}
