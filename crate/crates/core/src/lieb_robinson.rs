//! Heisenberg evolution, exact commutator norms and Lieb-Robinson bounds.
//!
//! Exact norms are evaluated in the energy eigenbasis: with `H = V E V†`,
//! `V† A(t) V` has entries `exp(i (E_m - E_n) t) (V† A V)_{mn}`, and the
//! commutator norm is unitarily invariant. When the operators and `H`
//! conserve a charge the computation runs block by block.

use ndarray::{Array1, Array2};
use rayon::prelude::*;
use serde::Serialize;

use crate::basis::BasisIndexer;
use crate::charge::ChargeSpec;
use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::linalg::{dense_norm, eigh, gemm, matmul, C64};
use crate::models::{lr_constants, TermSum};
use crate::operator::{LocalOperator, LocalTerm, DENSE_THRESHOLD};
use crate::sparse::Csr;

/// Default `μ` grid for the closed-form bound.
pub const MU_GRID: [f64; 4] = [0.5, 1.0, 1.5, 2.0];

/// `exp(-i t H) v` by Krylov projection with adaptive substeps.
pub fn expm_multiply(h: &Csr, v: &Array1<C64>, t: f64) -> Result<Array1<C64>> {
    let n = h.nrows();
    let scale = crate::spectral::row_sum_bound(h).max(1e-300);
    let steps = ((scale * t.abs()) / 8.0).ceil().max(1.0) as usize;
    let dt = t / steps as f64;
    let m_max = 40.min(n);
    let mut cur = v.clone();
    let tol = 1e-13;
    for _ in 0..steps {
        let beta0 = crate::linalg::norm(cur.view());
        if beta0 == 0.0 {
            return Ok(cur);
        }
        let mut basis: Vec<Array1<C64>> = vec![cur.mapv(|z| z / beta0)];
        let mut alpha = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let mut w = Array1::<C64>::zeros(n);
        let mut coeffs: Vec<C64> = Vec::new();
        for j in 0..m_max {
            h.matvec_into(basis[j].as_slice().expect("contiguous"), w.as_slice_mut().expect("contiguous"));
            for _ in 0..2 {
                for b in &basis {
                    let c = crate::linalg::vdot(b.view(), w.view());
                    w.scaled_add(-c, b);
                }
            }
            alpha.push(crate::linalg::vdot(basis[j].view(), h.matvec(basis[j].view()).view()).re);
            let bnorm = crate::linalg::norm(w.view());
            let mdim = j + 1;
            let mut tm = Array2::<C64>::zeros((mdim, mdim));
            for i in 0..mdim {
                tm[[i, i]] = C64::new(alpha[i], 0.0);
                if i + 1 < mdim {
                    tm[[i, i + 1]] = C64::new(beta[i], 0.0);
                    tm[[i + 1, i]] = C64::new(beta[i], 0.0);
                }
            }
            let u = crate::linalg::exp_i_hermitian(&tm, -dt)?;
            coeffs = u.column(0).to_vec();
            let err = bnorm * coeffs[mdim - 1].norm();
            if err < tol || bnorm < 1e-14 * scale || mdim == m_max {
                if err >= tol && bnorm >= 1e-14 * scale {
                    return Err(Error::ConvergenceFailure { iterations: mdim, residual: err });
                }
                break;
            }
            beta.push(bnorm);
            basis.push(w.mapv(|z| z / bnorm));
        }
        let mut next = Array1::<C64>::zeros(n);
        for (b, c) in basis.iter().zip(&coeffs) {
            next.scaled_add(*c * beta0, b);
        }
        cur = next;
    }
    Ok(cur)
}

/// `A(t) = exp(i H t) A exp(-i H t)`; dense below the dimension threshold,
/// column-wise Krylov propagation above it.
pub fn heisenberg_evolve(a: &LocalOperator, h: &Csr, t: f64) -> Result<LocalOperator> {
    let n = h.nrows();
    if a.dim() != n {
        return Err(Error::invalid("operator and Hamiltonian dimensions differ"));
    }
    if t == 0.0 {
        return Ok(a.clone());
    }
    let at = if n < DENSE_THRESHOLD {
        let e = eigh(&h.to_dense())?;
        let ad = gemm(&e.vectors, true, &a.matrix.mul_dense(&e.vectors), false);
        let evolved = phase_rotate(&ad, &e.values, t);
        matmul(&matmul(&e.vectors, &evolved), &crate::linalg::adjoint(&e.vectors))
    } else {
        // Columns of U† A U with U = exp(-i H t).
        let cols: Vec<Array1<C64>> = (0..n)
            .into_par_iter()
            .map(|j| {
                let mut e = Array1::<C64>::zeros(n);
                e[j] = C64::new(1.0, 0.0);
                let ue = expm_multiply(h, &e, t)?;
                let aue = a.matrix.matvec(ue.view());
                expm_multiply(h, &aue, -t)
            })
            .collect::<Result<_>>()?;
        let mut m = Array2::<C64>::zeros((n, n));
        for (j, c) in cols.iter().enumerate() {
            m.column_mut(j).assign(c);
        }
        m
    };
    Ok(LocalOperator::new(Csr::from_dense(&at), a.support.clone()))
}

/// Entries `exp(i (E_m - E_n) t) a_{mn}`.
fn phase_rotate(a: &Array2<C64>, energies: &[f64], t: f64) -> Array2<C64> {
    let ph: Vec<C64> = energies.iter().map(|&e| C64::from_polar(1.0, e * t)).collect();
    let mut out = a.clone();
    for ((m, n), v) in out.indexed_iter_mut() {
        *v *= ph[m] * ph[n].conj();
    }
    out
}

struct Block {
    energies: Vec<f64>,
    vectors: Array2<C64>,
    indexer: BasisIndexer,
}

/// Eigendecomposition of `H`, split into charge sectors when possible.
pub struct Evolver {
    blocks: Vec<Block>,
    charge: Option<ChargeSpec>,
    lattice: Lattice,
}

impl Evolver {
    /// Diagonalizes `h`; with a conserved `U1` charge each sector separately.
    pub fn new(h: &TermSum, charge: Option<&ChargeSpec>) -> Result<Self> {
        let dims = h.lattice().local_dims();
        let charge = charge.filter(|c| h.conserves(c)).cloned();
        let indexers: Vec<BasisIndexer> = match &charge {
            Some(c) => {
                let full = BasisIndexer::full(dims)?;
                let mut qs: Vec<i64> = (0..full.full_dim()).map(|k| full.total_charge(k, c)).collect();
                if c.conservation() == crate::charge::Conservation::Parity {
                    qs.iter_mut().for_each(|q| *q = q.rem_euclid(2));
                }
                qs.sort_unstable();
                qs.dedup();
                qs.into_iter().map(|q| BasisIndexer::sector(dims, c, q)).collect::<Result<_>>()?
            }
            None => vec![BasisIndexer::full(dims)?],
        };
        if let Some(b) = indexers.iter().find(|b| b.dim() >= DENSE_THRESHOLD) {
            return Err(Error::unsupported(format!(
                "exact evolution needs blocks below dimension {DENSE_THRESHOLD}, got {}",
                b.dim()
            )));
        }
        let blocks = indexers
            .into_par_iter()
            .map(|indexer| {
                let e = eigh(&h.to_dense(&indexer))?;
                Ok(Block { energies: e.values, vectors: e.vectors, indexer })
            })
            .collect::<Result<_>>()?;
        Ok(Evolver { blocks, charge, lattice: h.lattice().clone() })
    }

    fn conserving(&self, term: &LocalTerm) -> bool {
        match &self.charge {
            None => true,
            Some(c) => {
                let mut ts = TermSum::new(self.lattice.clone());
                ts.add(term.matrix().clone(), term.sites()).is_ok() && ts.conserves(c)
            }
        }
    }

    /// `|[A(t), B]|` for each time.
    pub fn commutator_norms(&self, a: &LocalTerm, b: &LocalTerm, times: &[f64]) -> Result<Vec<f64>> {
        if !self.conserving(a) || !self.conserving(b) {
            return Err(Error::invalid("operators must conserve the charge used to block the Hamiltonian"));
        }
        let prepared: Vec<(Array2<C64>, Array2<C64>)> = self
            .blocks
            .iter()
            .map(|blk| {
                let am = a.embed(&blk.indexer).matrix;
                let bm = b.embed(&blk.indexer).matrix;
                let at = gemm(&blk.vectors, true, &am.mul_dense(&blk.vectors), false);
                let bt = gemm(&blk.vectors, true, &bm.mul_dense(&blk.vectors), false);
                (at, bt)
            })
            .collect();
        times
            .par_iter()
            .map(|&t| {
                let mut best: f64 = 0.0;
                for (blk, (at, bt)) in self.blocks.iter().zip(&prepared) {
                    let a_t = phase_rotate(at, &blk.energies, t);
                    let c = matmul(&a_t, bt) - matmul(bt, &a_t);
                    best = best.max(dense_norm(&c)?);
                }
                Ok(best)
            })
            .collect()
    }
}

/// Exact `|[A(t), B]|` over a time grid.
pub fn commutator_norm_profile(
    a: &LocalTerm,
    b: &LocalTerm,
    h: &TermSum,
    charge: Option<&ChargeSpec>,
    times: &[f64],
) -> Result<Vec<f64>> {
    Evolver::new(h, charge)?.commutator_norms(a, b, times)
}

/// Result of the chain-series bound.
#[derive(Debug, Clone, Serialize)]
pub struct SeriesBound {
    /// `Σ_{k=1..k_max} term_k`.
    pub partial_sum: f64,
    /// Bound on the neglected orders `k > k_max`.
    pub tail: f64,
    pub k_max: usize,
    /// `term_k` for `k = 1..=k_max`.
    pub terms: Vec<f64>,
    /// `μ` at which the tail estimate was smallest.
    pub mu: f64,
}

impl SeriesBound {
    pub fn total(&self) -> f64 {
        self.partial_sum + self.tail
    }
}

/// Per-order chain weights `W_k = Σ_{Z_k ∩ Y ≠ ∅} w_k(Z_k)` for `k = 1..=k_max`.
pub fn chain_weights(h: &TermSum, x: &[usize], y: &[usize], k_max: usize) -> Result<Vec<f64>> {
    let terms = h.terms();
    let norms: Vec<f64> = terms.iter().map(|t| t.norm()).collect::<Result<_>>()?;
    let meets = |s: &[usize], set: &[usize]| s.iter().any(|i| set.contains(i));
    let nbrs: Vec<Vec<usize>> = (0..terms.len())
        .map(|a| (0..terms.len()).filter(|&b| meets(terms[a].sites(), terms[b].sites())).collect())
        .collect();
    let hits_y: Vec<bool> = terms.iter().map(|t| meets(t.sites(), y)).collect();
    let mut w: Vec<f64> = terms.iter().zip(&norms).map(|(t, &n)| if meets(t.sites(), x) { n } else { 0.0 }).collect();
    let mut out = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        if k > 1 {
            w = (0..terms.len()).map(|b| norms[b] * nbrs[b].iter().map(|&a| w[a]).sum::<f64>()).collect();
        }
        out.push(w.iter().zip(&hits_y).filter(|(_, &h)| h).map(|(v, _)| v).sum());
    }
    Ok(out)
}

/// `Σ_{k > k_max} z^k / k!` summed directly.
fn exp_tail(z: f64, k_max: usize) -> f64 {
    if z == 0.0 {
        return 0.0;
    }
    let mut term = 1.0;
    for k in 1..=k_max {
        term *= z / k as f64;
    }
    let mut sum = 0.0;
    let mut k = k_max + 1;
    loop {
        term *= z / k as f64;
        sum += term;
        if term <= 1e-17 * sum && k as f64 > z {
            return sum;
        }
        k += 1;
    }
}

fn check_disjoint(x: &[usize], y: &[usize]) -> Result<()> {
    if x.iter().any(|i| y.contains(i)) {
        return Err(Error::invalid("X and Y must be disjoint"));
    }
    if x.is_empty() || y.is_empty() {
        return Err(Error::invalid("X and Y must be nonempty"));
    }
    Ok(())
}

/// Chain-series bound truncated at `k_max` plus a closed-form tail.
///
/// With `k_max = None` the order starts at 12 and grows until the tail is
/// below `1e-3` of the partial sum, up to 40.
#[allow(clippy::too_many_arguments)]
pub fn lr_series_bound(
    h: &TermSum,
    x: &[usize],
    y: &[usize],
    t: f64,
    k_max: Option<usize>,
    norm_a: f64,
    norm_b: f64,
    mu_grid: &[f64],
) -> Result<SeriesBound> {
    check_disjoint(x, y)?;
    if k_max == Some(0) {
        return Err(Error::invalid("k_max must be at least 1"));
    }
    if mu_grid.is_empty() {
        return Err(Error::invalid("empty mu grid"));
    }
    let lat = h.lattice();
    let pref = 2.0 * norm_a * norm_b;
    let consts: Vec<(f64, f64)> = mu_grid.iter().map(|&mu| Ok((mu, lr_constants(h, mu)?.0))).collect::<Result<_>>()?;
    let tail_at = |k: usize| -> (f64, f64) {
        consts
            .iter()
            .map(|&(mu, s)| {
                let geo: f64 = x.iter().map(|&i| (-mu * lat.dist_to_set(i, y) as f64).exp()).sum();
                (pref * geo * exp_tail(2.0 * s * t.abs(), k), mu)
            })
            .fold((f64::INFINITY, 0.0), |best, c| if c.0 < best.0 { c } else { best })
    };
    let cap = k_max.unwrap_or(40);
    let weights = chain_weights(h, x, y, cap)?;
    let mut terms = Vec::with_capacity(cap);
    let mut fact = 1.0;
    for (k, w) in weights.iter().enumerate() {
        fact *= 2.0 * t.abs() / (k + 1) as f64;
        terms.push(pref * fact * w);
    }
    let pick = |k: usize| {
        let partial: f64 = terms[..k].iter().sum();
        let (tail, mu) = tail_at(k);
        SeriesBound { partial_sum: partial, tail, k_max: k, terms: terms[..k].to_vec(), mu }
    };
    Ok(match k_max {
        Some(k) => pick(k),
        None => {
            let mut k = 12.min(cap);
            loop {
                let b = pick(k);
                if b.tail < 1e-3 * b.partial_sum || k >= cap {
                    break b;
                }
                k += 1;
            }
        }
    })
}

/// The closed-form bound at one `μ`.
#[derive(Debug, Clone, Serialize)]
pub struct ExpBound {
    pub mu: f64,
    pub s: f64,
    pub v_lr: f64,
    /// `2 |A| |B| Σ_{i∈X} exp(-μ dist(i, Y)) (exp(2 s |t|) - 1)`.
    pub value: f64,
    /// `2 |X| |A| |B| exp(-μ d / 2)`, valid when `d >= v_LR |t|`.
    pub corollary: Option<f64>,
}

#[allow(clippy::too_many_arguments)]
pub fn lr_exponential_bound(
    norm_a: f64,
    norm_b: f64,
    x: &[usize],
    y: &[usize],
    lattice: &Lattice,
    mu: f64,
    s: f64,
    t: f64,
) -> Result<ExpBound> {
    check_disjoint(x, y)?;
    let v_lr = 4.0 * s / mu;
    let geo: f64 = x.iter().map(|&i| (-mu * lattice.dist_to_set(i, y) as f64).exp()).sum();
    let value = 2.0 * norm_a * norm_b * geo * (2.0 * s * t.abs()).exp_m1();
    let d = lattice.set_distance(x, y) as f64;
    let corollary = (d >= v_lr * t.abs()).then(|| 2.0 * x.len() as f64 * norm_a * norm_b * (-mu * d / 2.0).exp());
    Ok(ExpBound { mu, s, v_lr, value, corollary })
}

/// Exact norms alongside both bounds over a time grid.
#[derive(Debug, Clone, Serialize)]
pub struct LightConeProfile {
    pub times: Vec<f64>,
    pub exact: Vec<f64>,
    pub series: Vec<SeriesBound>,
    /// `exp_bounds[k][m]`: closed form at `times[k]` and `mu_grid[m]`.
    pub exp_bounds: Vec<Vec<ExpBound>>,
}

impl LightConeProfile {
    pub fn exp_min(&self, k: usize) -> f64 {
        self.exp_bounds[k].iter().map(|b| b.value).fold(f64::INFINITY, f64::min)
    }

    /// Number of `(t, bound)` pairs where the exact norm exceeds a bound.
    pub fn violations(&self) -> usize {
        let mut v = 0;
        for k in 0..self.times.len() {
            let e = self.exact[k];
            let slack = 1e-12 * (1.0 + e);
            v += usize::from(e > self.series[k].total() + slack);
            v += self.exp_bounds[k].iter().filter(|b| e > b.value + slack).count();
        }
        v
    }
}

/// Builds the complete profile for `A` on `X` and `B` on `Y`.
#[allow(clippy::too_many_arguments)]
pub fn light_cone_profile(
    evolver: &Evolver,
    h: &TermSum,
    a: &LocalTerm,
    b: &LocalTerm,
    times: &[f64],
    k_max: Option<usize>,
    mu_grid: &[f64],
) -> Result<LightConeProfile> {
    let exact = evolver.commutator_norms(a, b, times)?;
    let (na, nb) = (a.norm()?, b.norm()?);
    let (x, y) = (a.sites(), b.sites());
    let series = times
        .iter()
        .map(|&t| lr_series_bound(h, x, y, t, k_max, na, nb, mu_grid))
        .collect::<Result<_>>()?;
    let consts: Vec<(f64, f64)> = mu_grid.iter().map(|&mu| Ok((mu, lr_constants(h, mu)?.0))).collect::<Result<_>>()?;
    let exp_bounds = times
        .iter()
        .map(|&t| {
            consts
                .iter()
                .map(|&(mu, s)| lr_exponential_bound(na, nb, x, y, h.lattice(), mu, s, t))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok(LightConeProfile { times: times.to_vec(), exact, series, exp_bounds })
}
