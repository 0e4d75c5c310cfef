//! Gaussian step filter, filtered correlation functions and quasi-adiabatic
//! continuation.

use ndarray::{Array1, Array2};
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::linalg::{adjoint, eigh, exp_i_hermitian, gemv, identity, matmul, max_abs_diff, vdot, Eigh, C64, I, ZERO};
use crate::operator::LocalOperator;
use crate::spectral::{degeneracy_tolerance, SpectralResult};
use crate::sparse::Csr;

/// Width parameter of the step filter together with the reference gap.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct StepFilterParams {
    pub alpha: f64,
    pub delta_e: f64,
}

impl StepFilterParams {
    pub fn new(alpha: f64, delta_e: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::invalid(format!("alpha must be positive, got {alpha}")));
        }
        Ok(StepFilterParams { alpha, delta_e })
    }

    /// `exp(-ΔE² / (4 α))`.
    pub fn error_scale(&self) -> f64 {
        (-self.delta_e * self.delta_e / (4.0 * self.alpha)).exp()
    }
}

/// `(1 + erf(E / (2 √α))) / 2`, a smoothed unit step.
///
/// Both branches share `erfc(|x|) / 2`, so `step_filter(E) + step_filter(-E)`
/// rounds to exactly one. Panics unless `alpha > 0`.
pub fn step_filter(e: f64, alpha: f64) -> f64 {
    assert!(alpha > 0.0, "step filter needs alpha > 0");
    let x = e / (2.0 * alpha.sqrt());
    let a = 0.5 * erfc(x.abs());
    if x >= 0.0 {
        1.0 - a
    } else {
        a
    }
}

/// Connected ground-state correlator `<A B> - <A P_0 B>` with
/// `<O> = tr(P_0 O) / q` over the `q`-fold ground block.
pub fn connected_correlation(a: &LocalOperator, b: &LocalOperator, spectral: &SpectralResult) -> Result<C64> {
    let q = spectral.ground_multiplicity();
    if q == 0 || spectral.states.len() < q {
        return Err(Error::invalid("spectral result carries no ground states"));
    }
    let ground = &spectral.states[..q];
    let dim = ground[0].len();
    if a.dim() != dim || b.dim() != dim {
        return Err(Error::invalid("operator dimension does not match the ground states"));
    }
    let a_adj = a.matrix.adjoint();
    let a_dag_psi: Vec<Array1<C64>> = ground.iter().map(|g| a_adj.matvec(g.view())).collect();
    let b_psi: Vec<Array1<C64>> = ground.iter().map(|g| b.matrix.matvec(g.view())).collect();
    let mut full = ZERO;
    let mut projected = ZERO;
    for i in 0..q {
        full += vdot(a_dag_psi[i].view(), b_psi[i].view());
        for g in ground {
            projected += vdot(a_dag_psi[i].view(), g.view()) * vdot(g.view(), b_psi[i].view());
        }
    }
    Ok((full - projected) / q as f64)
}

/// `<n|O|0>` and `<n|O†|0>` over the eigenbasis of a spectrum.
#[derive(Debug, Clone)]
pub struct GroundColumns {
    forward: Array1<C64>,
    adjoint: Array1<C64>,
}

impl GroundColumns {
    pub fn new(op: &LocalOperator, spectrum: &Eigh) -> Result<Self> {
        let v = &spectrum.vectors;
        if op.dim() != v.nrows() {
            return Err(Error::invalid("operator dimension does not match the spectrum"));
        }
        let psi = v.column(0);
        let proj = |m: &Csr| gemv(v, true, m.matvec(psi).view());
        Ok(GroundColumns { forward: proj(&op.matrix), adjoint: proj(&op.matrix.adjoint()) })
    }
}

fn require_unique_ground(spectrum: &Eigh, alpha: f64) -> Result<()> {
    if !(alpha > 0.0) {
        return Err(Error::invalid(format!("alpha must be positive, got {alpha}")));
    }
    let n = spectrum.values.len();
    if n < 2 {
        return Err(Error::invalid("need at least two levels"));
    }
    let norm = spectrum.values[0].abs().max(spectrum.values[n - 1].abs());
    if spectrum.values[1] - spectrum.values[0] < degeneracy_tolerance(norm) {
        return Err(Error::unsupported("filtered correlation requires a unique ground state"));
    }
    Ok(())
}

/// [`filtered_correlation`] from precomputed columns.
pub fn filtered_from_columns(a: &GroundColumns, b: &GroundColumns, spectrum: &Eigh, alpha: f64) -> Result<C64> {
    require_unique_ground(spectrum, alpha)?;
    if a.forward.len() != spectrum.values.len() || b.forward.len() != spectrum.values.len() {
        return Err(Error::invalid("columns do not match the spectrum"));
    }
    let mut total = ZERO;
    for k in 1..spectrum.values.len() {
        let de = spectrum.values[k] - spectrum.values[0];
        total += a.adjoint[k].conj() * b.forward[k] * step_filter(de, alpha);
        total -= b.adjoint[k].conj() * a.forward[k] * step_filter(-de, alpha);
    }
    Ok(total)
}

/// Spectral-basis form of the filtered time integral:
/// `Σ_{n>0} <0|A|n><n|B|0> s(E_n - E_0) - Σ_{n>0} <0|B|n><n|A|0> s(-(E_n - E_0))`.
pub fn filtered_correlation(a: &LocalOperator, b: &LocalOperator, spectrum: &Eigh, alpha: f64) -> Result<C64> {
    require_unique_ground(spectrum, alpha)?;
    filtered_from_columns(&GroundColumns::new(a, spectrum)?, &GroundColumns::new(b, spectrum)?, spectrum, alpha)
}

/// Least-squares fit of `log|C|` against distance.
#[derive(Debug, Clone, Serialize)]
pub struct DecayFit {
    /// `-1 / slope`; infinite when the slope is nonnegative.
    pub correlation_length: f64,
    pub prefactor: f64,
    /// Root-mean-square residual of the fit in `log|C|`.
    pub residual: f64,
    /// Set when the fitted slope is nonnegative.
    pub no_decay: bool,
}

pub fn decay_fit(distances: &[f64], magnitudes: &[f64]) -> Result<DecayFit> {
    if distances.len() != magnitudes.len() {
        return Err(Error::invalid("distances and magnitudes differ in length"));
    }
    if distances.len() < 3 {
        return Err(Error::invalid("decay fit needs at least three points"));
    }
    if let Some(m) = magnitudes.iter().find(|&&m| !(m > 0.0)) {
        return Err(Error::invalid(format!("magnitudes must be positive, got {m}")));
    }
    let n = distances.len() as f64;
    let ys: Vec<f64> = magnitudes.iter().map(|m| m.ln()).collect();
    let mx = distances.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = distances.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("distances must not all coincide"));
    }
    let sxy: f64 = distances.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = distances.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let no_decay = slope >= 0.0;
    Ok(DecayFit {
        correlation_length: if no_decay { f64::INFINITY } else { -1.0 / slope },
        prefactor: intercept.exp(),
        residual: (rss / n).sqrt(),
        no_decay,
    })
}

/// `f(x) = -(1 - exp(-x² / (2Δ²))) / x` with `f(0) = 0`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct QaFilter {
    pub delta: f64,
}

impl QaFilter {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::invalid(format!("filter scale must be positive, got {delta}")));
        }
        Ok(QaFilter { delta })
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x == 0.0 {
            return 0.0;
        }
        (-x * x / (2.0 * self.delta * self.delta)).exp_m1() / x
    }
}

/// Quasi-adiabatic generator `D` with `<a| iD |b> = f(E_a - E_b) <a| ∂H |b>`.
pub fn qa_generator(dh: &Csr, spectrum: &Eigh, filter: &QaFilter) -> Result<Array2<C64>> {
    let v = &spectrum.vectors;
    if dh.nrows() != v.nrows() {
        return Err(Error::invalid("derivative and eigenbasis dimensions differ"));
    }
    let mut m = crate::linalg::gemm(v, true, &dh.mul_dense(v), false);
    let e = &spectrum.values;
    for ((a, b), z) in m.indexed_iter_mut() {
        *z *= -I * filter.eval(e[a] - e[b]);
    }
    // Hermitian by oddness of f.
    Ok(matmul(&matmul(v, &m), &adjoint(v)))
}

/// How the filter scale `Δ` is chosen for a path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum FilterScale {
    Absolute(f64),
    /// `Δ = fraction * ΔE` with `ΔE` the smallest gap over the path nodes.
    GapFraction(f64),
}

impl Default for FilterScale {
    fn default() -> Self {
        FilterScale::GapFraction(0.5)
    }
}

/// Outcome of path-ordered quasi-adiabatic transport.
#[derive(Debug, Clone, Serialize)]
pub struct TransportResult {
    #[serde(skip)]
    pub final_state: Array1<C64>,
    pub steps: usize,
    pub delta: f64,
    /// Smallest gap seen along the path.
    pub min_gap: f64,
    pub generator_norms: Vec<f64>,
    /// `|<ψ_0(1), ψ>|²`.
    pub fidelity: f64,
    /// `arg <ψ_0(1), ψ>`.
    pub phase: f64,
    /// Largest `|U†U - I|` over the step factors.
    pub unitarity_defect: f64,
    /// `<ψ_0(0), ψ>`; for closed paths its argument is the loop phase.
    pub return_overlap: num_complex::Complex64,
}

fn gap_of(e: &Eigh) -> f64 {
    e.values.get(1).map_or(f64::INFINITY, |v| v - e.values[0])
}

/// Transports the ground state of `path(0)` to `s = 1` with the midpoint
/// product of `exp(i δs D_{s_k})`. `path(s)` returns `(H_s, ∂_s H_s)` in a
/// fixed basis. Gaps are taken over the endpoints and midpoints.
pub fn qa_transport<F>(path: F, steps: usize, scale: FilterScale) -> Result<TransportResult>
where
    F: Fn(f64) -> Result<(Csr, Csr)> + Sync,
{
    if steps < 2 {
        return Err(Error::invalid("transport needs at least two steps"));
    }
    let ds = 1.0 / steps as f64;
    let nodes: Vec<f64> = std::iter::once(0.0)
        .chain((0..steps).map(|k| (k as f64 + 0.5) * ds))
        .chain(std::iter::once(1.0))
        .collect();
    let data: Vec<(Eigh, Csr)> = nodes
        .par_iter()
        .map(|&s| {
            let (h, dh) = path(s)?;
            Ok((eigh(&h.to_dense())?, dh))
        })
        .collect::<Result<_>>()?;
    let min_gap = data.iter().map(|(e, _)| gap_of(e)).fold(f64::INFINITY, f64::min);
    for (s, (e, _)) in nodes.iter().zip(&data) {
        let n = e.values.len();
        let tol = degeneracy_tolerance(e.values[0].abs().max(e.values[n - 1].abs()));
        if gap_of(e) < tol {
            return Err(Error::GapClosure { location: format!("s = {s}"), gap: gap_of(e) });
        }
    }
    let filter = QaFilter::new(match scale {
        FilterScale::Absolute(d) => d,
        FilterScale::GapFraction(f) => f * min_gap,
    })?;
    let start = data[0].0.vectors.column(0).to_owned();
    let target = data[steps + 1].0.vectors.column(0).to_owned();
    let mut psi = start.clone();
    let mut generator_norms = Vec::with_capacity(steps);
    let mut unitarity_defect: f64 = 0.0;
    let dim = psi.len();
    for (e, dh) in &data[1..=steps] {
        let d = qa_generator(dh, e, &filter)?;
        generator_norms.push(crate::linalg::dense_norm(&d)?);
        let u = exp_i_hermitian(&d, ds)?;
        unitarity_defect = unitarity_defect.max(max_abs_diff(&crate::linalg::gemm(&u, true, &u, false), &identity(dim)));
        psi = u.dot(&psi);
    }
    let overlap = vdot(target.view(), psi.view());
    Ok(TransportResult {
        final_state: psi.clone(),
        steps,
        delta: filter.delta,
        min_gap,
        generator_norms,
        fidelity: overlap.norm_sqr(),
        phase: overlap.arg(),
        unitarity_defect,
        return_overlap: vdot(start.view(), psi.view()),
    })
}
