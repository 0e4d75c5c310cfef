//! Lanczos iteration with full reorthogonalization for Hermitian operators
//! given only through their action on vectors.
//!
//! Eigenpairs are extracted one at a time; converged vectors are locked and
//! every later Krylov space is kept orthogonal to them, so exactly
//! degenerate levels are resolved one by one.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{eigh_real, C64, ZERO};

#[derive(Debug, Clone)]
pub struct Options {
    /// Residual tolerance relative to `max(1, |A|)`.
    pub tol: f64,
    /// Krylov dimension before a thick-free restart from the current Ritz vector.
    pub max_krylov: usize,
    pub max_restarts: usize,
    pub seed: u64,
}

impl Default for Options {
    fn default() -> Self {
        Options { tol: 1e-10, max_krylov: 160, max_restarts: 60, seed: 0x5eed }
    }
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).fold(ZERO, |s, (x, y)| s + x.conj() * y)
}

fn nrm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn axpy(alpha: C64, x: &[C64], y: &mut [C64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

fn orthogonalize(w: &mut [C64], basis: &[Vec<C64>]) {
    for _ in 0..2 {
        for v in basis {
            let c = dot(v, w);
            axpy(-c, v, w);
        }
    }
}

/// Lowest eigenpair of the tridiagonal matrix with the given diagonals.
fn lowest_ritz(alpha: &[f64], beta: &[f64]) -> Result<(f64, Vec<f64>, f64)> {
    let m = alpha.len();
    let mut t = Array2::zeros((m, m));
    for i in 0..m {
        t[[i, i]] = alpha[i];
        if i + 1 < m {
            t[[i, i + 1]] = beta[i];
            t[[i + 1, i]] = beta[i];
        }
    }
    let (w, v) = eigh_real(&t)?;
    let spread = w[0].abs().max(w[m - 1].abs());
    Ok((w[0], v.column(0).to_vec(), spread))
}

struct Pair {
    value: f64,
    vector: Vec<C64>,
}

fn one_pair<F>(n: usize, matvec: &mut F, locked: &[Vec<C64>], opts: &Options, stream: u64) -> Result<Pair>
where
    F: FnMut(&[C64], &mut [C64]),
{
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(stream);
    let mut start: Vec<C64> = (0..n).map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
    orthogonalize(&mut start, locked);
    let s = nrm(&start);
    if s == 0.0 {
        return Err(Error::invalid("no room left for another eigenvector"));
    }
    start.iter_mut().for_each(|z| *z /= s);

    let mut scale: f64 = 1.0;
    let mut last_residual = f64::INFINITY;
    let mut w = vec![ZERO; n];
    for _restart in 0..opts.max_restarts {
        let mut basis: Vec<Vec<C64>> = vec![start.clone()];
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let m_max = opts.max_krylov.min(n - locked.len()).max(1);
        let mut ritz = (0.0, vec![1.0], 0.0);
        for j in 0..m_max {
            matvec(&basis[j], &mut w);
            let a = dot(&basis[j], &w).re;
            alpha.push(a);
            axpy(C64::new(-a, 0.0), &basis[j], &mut w);
            if j > 0 {
                axpy(C64::new(-beta[j - 1], 0.0), &basis[j - 1], &mut w);
            }
            orthogonalize(&mut w, locked);
            orthogonalize(&mut w, &basis);
            let b = nrm(&w);
            let last = j + 1 == m_max;
            let check = last || b <= 1e-14 * scale || (j + 1) % 4 == 0;
            if check {
                ritz = lowest_ritz(&alpha, &beta)?;
                scale = scale.max(ritz.2);
                let est = b * ritz.1[j].abs();
                if est <= 0.1 * opts.tol * scale || b <= 1e-14 * scale || last {
                    break;
                }
            }
            beta.push(b);
            basis.push(w.iter().map(|z| z / b).collect());
        }
        let mut y = vec![ZERO; n];
        for (v, &c) in basis.iter().zip(&ritz.1) {
            axpy(C64::new(c, 0.0), v, &mut y);
        }
        orthogonalize(&mut y, locked);
        let ny = nrm(&y);
        y.iter_mut().for_each(|z| *z /= ny);
        matvec(&y, &mut w);
        let theta = dot(&y, &w).re;
        axpy(C64::new(-theta, 0.0), &y, &mut w);
        last_residual = nrm(&w);
        if last_residual <= opts.tol * scale {
            return Ok(Pair { value: theta, vector: y });
        }
        start = y;
    }
    Err(Error::ConvergenceFailure { iterations: opts.max_restarts * opts.max_krylov, residual: last_residual })
}

/// The `k` lowest eigenpairs of the Hermitian operator `matvec` on `C^n`,
/// ascending, each with residual below `tol * max(1, |A|)`.
pub fn lowest<F>(n: usize, mut matvec: F, k: usize, opts: &Options) -> Result<(Vec<f64>, Vec<Vec<C64>>)>
where
    F: FnMut(&[C64], &mut [C64]),
{
    if k > n {
        return Err(Error::invalid(format!("requested {k} eigenpairs of a {n}-dimensional operator")));
    }
    let mut pairs: Vec<Pair> = Vec::with_capacity(k);
    let mut locked: Vec<Vec<C64>> = Vec::with_capacity(k);
    for idx in 0..k {
        let p = one_pair(n, &mut matvec, &locked, opts, idx as u64)?;
        locked.push(p.vector.clone());
        pairs.push(p);
    }
    pairs.sort_by(|a, b| a.value.total_cmp(&b.value));
    Ok((pairs.iter().map(|p| p.value).collect(), pairs.into_iter().map(|p| p.vector).collect()))
}

/// Largest eigenvalue of a Hermitian operator.
pub fn largest<F>(n: usize, mut matvec: F, opts: &Options) -> Result<f64>
where
    F: FnMut(&[C64], &mut [C64]),
{
    let (w, _) = lowest(
        n,
        |x, y| {
            matvec(x, y);
            y.iter_mut().for_each(|z| *z = -*z);
        },
        1,
        opts,
    )?;
    Ok(-w[0])
}
