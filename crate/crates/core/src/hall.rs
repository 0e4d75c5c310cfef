//! Berry curvature on the flux torus, Chern numbers and quasi-adiabatic
//! loop phases.
//!
//! Plaquettes are traversed `00 → 01 → 11 → 10` (indices `θφ`), the
//! orientation for which the link phase equals the phase acquired by
//! counterclockwise transport. Curvature is phase per unit flux area and
//! `σ_xy = 2π F(0, 0)` in units of `e²/h`.

use std::f64::consts::{PI, TAU};

use ndarray::{Array1, Array2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::BasisIndexer;
use crate::charge::ChargeSpec;
use crate::error::{Error, Result};
use crate::filters_qa::{qa_transport, FilterScale, TransportResult};
use crate::linalg::{vdot, C64};
use crate::models::{flux_torus_hamiltonian, twist_derivative, TermSum, TwistAngle, TwistSpec};
use crate::spectral::{indexer_for, lowest_eigenpairs, residual, SolverOptions};
use crate::sparse::Csr;

/// A Hamiltonian family over the flux torus.
pub trait FluxFamily: Sync {
    fn hamiltonian(&self, theta: f64, phi: f64) -> Result<Csr>;
    /// `(∂_θ H, ∂_φ H)`.
    fn derivatives(&self, theta: f64, phi: f64) -> Result<(Csr, Csr)>;
}

/// `H = d · σ` with `d = (sin θ, sin φ, m + cos θ + cos φ)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TwoLevelFamily {
    pub mass: f64,
}

impl TwoLevelFamily {
    /// `m = √π - 2`, where the curvature at the origin is exactly `1 / (2π)` in magnitude.
    pub const DEFAULT_MASS: f64 = 1.772_453_850_905_516 - 2.0;

    pub fn new(mass: Option<f64>) -> Self {
        TwoLevelFamily { mass: mass.unwrap_or(Self::DEFAULT_MASS) }
    }

    fn pauli_sum(d: [f64; 3]) -> Csr {
        let m = Array2::from_shape_vec(
            (2, 2),
            vec![C64::new(d[2], 0.0), C64::new(d[0], -d[1]), C64::new(d[0], d[1]), C64::new(-d[2], 0.0)],
        )
        .expect("2x2");
        Csr::from_dense(&m)
    }
}

impl FluxFamily for TwoLevelFamily {
    fn hamiltonian(&self, theta: f64, phi: f64) -> Result<Csr> {
        Ok(Self::pauli_sum([theta.sin(), phi.sin(), self.mass + theta.cos() + phi.cos()]))
    }

    fn derivatives(&self, theta: f64, phi: f64) -> Result<(Csr, Csr)> {
        Ok((Self::pauli_sum([theta.cos(), 0.0, -theta.sin()]), Self::pauli_sum([0.0, phi.cos(), -phi.sin()])))
    }
}

/// A flux-independent Hamiltonian.
#[derive(Debug, Clone)]
pub struct ConstantFamily(pub Csr);

impl FluxFamily for ConstantFamily {
    fn hamiltonian(&self, _: f64, _: f64) -> Result<Csr> {
        Ok(self.0.clone())
    }

    fn derivatives(&self, _: f64, _: f64) -> Result<(Csr, Csr)> {
        let n = self.0.nrows();
        Ok((Csr::zeros(n, n), Csr::zeros(n, n)))
    }
}

/// `H_{θ,φ}` of a lattice model on a torus, restricted to one charge sector.
#[derive(Debug, Clone)]
pub struct TwistedFamily {
    h: TermSum,
    charge: ChargeSpec,
    indexer: BasisIndexer,
}

impl TwistedFamily {
    pub fn new(h: TermSum, charge: ChargeSpec, sector: i64) -> Result<Self> {
        charge.require_u1()?;
        let indexer = indexer_for(&h, Some((&charge, sector)))?;
        // Validates the twist assignment once.
        flux_torus_hamiltonian(&h, &charge, &TwistSpec::default())?;
        Ok(TwistedFamily { h, charge, indexer })
    }

    pub fn dim(&self) -> usize {
        self.indexer.dim()
    }
}

impl FluxFamily for TwistedFamily {
    fn hamiltonian(&self, theta: f64, phi: f64) -> Result<Csr> {
        Ok(flux_torus_hamiltonian(&self.h, &self.charge, &TwistSpec::flux(theta, phi))?.to_csr(&self.indexer))
    }

    fn derivatives(&self, theta: f64, phi: f64) -> Result<(Csr, Csr)> {
        let tw = TwistSpec::flux(theta, phi);
        let dt = twist_derivative(&self.h, &self.charge, &tw, TwistAngle::Theta)?.to_csr(&self.indexer);
        let dp = twist_derivative(&self.h, &self.charge, &tw, TwistAngle::Phi)?.to_csr(&self.indexer);
        Ok((dt, dp))
    }
}

/// Ground states on an `n x n` grid of the flux torus and their plaquette phases.
#[derive(Debug, Clone, Serialize)]
pub struct FluxGrid {
    pub n: usize,
    /// Gap above the ground state at `(θ_a, φ_b)`, index `a n + b`.
    pub gaps: Vec<f64>,
    pub min_gap: f64,
    /// Plaquette phase with lower-left corner `(a, b)`, index `a n + b`.
    pub plaquettes: Vec<f64>,
    /// `Σ F_p / 2π`.
    pub chern: f64,
    /// Set when some `|F_p|` reaches the branch cut.
    pub under_resolved: bool,
    /// Largest `|H ψ - E ψ|` over the stored ground states.
    pub max_residual: f64,
    #[serde(skip)]
    pub states: Vec<Array1<C64>>,
}

impl FluxGrid {
    pub fn angle(&self, k: usize) -> f64 {
        TAU * k as f64 / self.n as f64
    }

    /// Plaquette phase per unit flux area averaged over the four plaquettes at vertex `(a, b)`.
    pub fn curvature_at(&self, a: usize, b: usize) -> f64 {
        let n = self.n;
        let area = (TAU / n as f64).powi(2);
        let p = |i: usize, j: usize| self.plaquettes[(i % n) * n + j % n];
        (p(a, b) + p(a + n - 1, b) + p(a, b + n - 1) + p(a + n - 1, b + n - 1)) / (4.0 * area)
    }

    /// `|Σ F_p - 2π round(Σ F_p / 2π)|`.
    pub fn stokes_deviation(&self) -> f64 {
        let total: f64 = self.plaquettes.iter().sum();
        (total - TAU * (total / TAU).round()).abs()
    }
}

/// Link-phase curvature of states stored at index `a n + b`.
pub fn plaquette_phases(states: &[Array1<C64>], n: usize) -> Vec<f64> {
    let s = |a: usize, b: usize| states[(a % n) * n + b % n].view();
    (0..n * n)
        .map(|k| {
            let (a, b) = (k / n, k % n);
            let w = vdot(s(a, b), s(a, b + 1))
                * vdot(s(a, b + 1), s(a + 1, b + 1))
                * vdot(s(a + 1, b + 1), s(a + 1, b))
                * vdot(s(a + 1, b), s(a, b));
            w.arg()
        })
        .collect()
}

pub fn berry_curvature_grid(family: &dyn FluxFamily, n: usize, opts: &SolverOptions) -> Result<FluxGrid> {
    if n < 2 {
        return Err(Error::invalid("flux grid needs n >= 2"));
    }
    let points: Vec<(Array1<C64>, f64, f64)> = (0..n * n)
        .into_par_iter()
        .map(|k| {
            let (th, ph) = (TAU * (k / n) as f64 / n as f64, TAU * (k % n) as f64 / n as f64);
            let m = family.hamiltonian(th, ph)?;
            let r = lowest_eigenpairs(&m, 2.min(m.nrows()), opts)?;
            if r.degenerate {
                return Err(Error::GapClosure { location: format!("theta = {th}, phi = {ph}"), gap: r.gap });
            }
            let res = residual(&m, r.energies[0], r.ground());
            Ok((r.ground().clone(), r.gap, res))
        })
        .collect::<Result<_>>()?;
    let max_residual = points.iter().map(|p| p.2).fold(0.0, f64::max);
    let gaps: Vec<f64> = points.iter().map(|p| p.1).collect();
    let states: Vec<Array1<C64>> = points.into_iter().map(|p| p.0).collect();
    let plaquettes = plaquette_phases(&states, n);
    let chern = plaquettes.iter().sum::<f64>() / TAU;
    Ok(FluxGrid {
        n,
        min_gap: gaps.iter().copied().fold(f64::INFINITY, f64::min),
        gaps,
        under_resolved: plaquettes.iter().any(|f| f.abs() >= PI - 1e-9),
        chern,
        plaquettes,
        max_residual,
        states,
    })
}

/// Nearest integer to the grid's Chern sum and the distance to it.
pub fn chern_number(grid: &FluxGrid) -> Result<(i64, f64)> {
    let c = grid.chern.round();
    let deviation = (grid.chern - c).abs();
    if deviation > 0.1 {
        return Err(Error::NonQuantized { value: grid.chern, deviation });
    }
    Ok((c as i64, deviation))
}

/// A circle in flux space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoopSpec {
    pub center: (f64, f64),
    pub radius: f64,
    #[serde(default)]
    pub clockwise: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LoopPhaseResult {
    pub spec: LoopSpec,
    pub steps: usize,
    /// `arg <ψ_start, transported>`.
    pub phase: f64,
    /// `|<ψ_start, transported>|`.
    pub overlap: f64,
    pub delta: f64,
    pub min_gap: f64,
    /// `F π r²` (sign-adjusted for orientation) when a reference curvature is given.
    pub expected: Option<f64>,
    /// `|phase - expected|`.
    pub comparison: Option<f64>,
}

/// Transports along a closed path `s ↦ (θ(s), φ(s), θ'(s), φ'(s))`.
fn transport_along<P>(family: &dyn FluxFamily, path: P, steps: usize, scale: FilterScale) -> Result<TransportResult>
where
    P: Fn(f64) -> (f64, f64, f64, f64) + Sync,
{
    qa_transport(
        |s| {
            let (th, ph, dth, dph) = path(s);
            let h = family.hamiltonian(th, ph)?;
            let (a, b) = family.derivatives(th, ph)?;
            Ok((h.clone(), a.lincomb(C64::new(dth, 0.0), &b, C64::new(dph, 0.0))))
        },
        steps,
        scale,
    )
}

/// Quasi-adiabatic transport around a circle; `reference` is the curvature at its center.
pub fn qa_loop_phase(
    family: &dyn FluxFamily,
    spec: LoopSpec,
    steps: usize,
    scale: FilterScale,
    reference: Option<f64>,
) -> Result<LoopPhaseResult> {
    let (c0, c1) = spec.center;
    let r = spec.radius;
    let o = if spec.clockwise { -1.0 } else { 1.0 };
    let t = transport_along(
        family,
        |s| {
            let w = TAU * s;
            (c0 + r * w.cos(), c1 + o * r * w.sin(), -TAU * r * w.sin(), o * TAU * r * w.cos())
        },
        steps,
        scale,
    )?;
    let overlap = t.return_overlap.norm();
    if overlap < 0.99 {
        return Err(Error::UnreliablePhase { overlap });
    }
    let phase = if r == 0.0 { 0.0 } else { t.return_overlap.arg() };
    let expected = reference.map(|f| o * f * PI * r * r);
    Ok(LoopPhaseResult {
        spec,
        steps,
        phase,
        overlap,
        delta: t.delta,
        min_gap: t.min_gap,
        expected,
        comparison: expected.map(|e| (phase - e).abs()),
    })
}

/// Transported phases of the `n x n` plaquettes tiling the torus, each
/// traversed counterclockwise with `steps_per_edge` steps per side.
pub fn transported_tiling(family: &dyn FluxFamily, n: usize, steps_per_edge: usize, scale: FilterScale) -> Result<Vec<f64>> {
    let h = TAU / n as f64;
    (0..n * n)
        .into_par_iter()
        .map(|k| {
            let (a, b) = ((k / n) as f64 * h, (k % n) as f64 * h);
            let t = transport_along(
                family,
                |s| {
                    let (side, u) = ((4.0 * s).floor().min(3.0), (4.0 * s).fract());
                    let u = if 4.0 * s >= 4.0 { 1.0 } else { u };
                    match side as u8 {
                        0 => (a + h * u, b, 4.0 * h, 0.0),
                        1 => (a + h, b + h * u, 0.0, 4.0 * h),
                        2 => (a + h * (1.0 - u), b + h, -4.0 * h, 0.0),
                        _ => (a, b + h * (1.0 - u), 0.0, -4.0 * h),
                    }
                },
                4 * steps_per_edge,
                scale,
            )?;
            Ok(t.return_overlap.arg())
        })
        .collect()
}

/// Hall conductance from small-loop phases at the origin, with certificates.
#[derive(Debug, Clone, Serialize)]
pub struct HallResult {
    /// `σ_xy` in units of `e²/h`.
    pub sigma_xy: f64,
    pub nearest_integer: i64,
    /// `|σ_xy - nearest_integer|`.
    pub certificate: f64,
    pub loop_full: LoopPhaseResult,
    pub loop_half: LoopPhaseResult,
    /// Grid Chern number and its deviation from an integer.
    pub chern: i64,
    pub chern_deviation: f64,
    /// Agreement of `nearest_integer` with `chern`.
    pub integers_agree: bool,
    /// `|Σ F_p - 2π k|` over the grid plaquettes.
    pub stokes_deviation: f64,
    /// Same for plaquette phases obtained by transport, when computed.
    pub transported_stokes_deviation: Option<f64>,
    pub min_gap: f64,
}

/// Options for [`hall_conductance`].
#[derive(Debug, Clone, Copy)]
pub struct HallOptions {
    pub n: usize,
    /// Loop radius; defaults to `2π / n`.
    pub radius: Option<f64>,
    pub steps: usize,
    /// Filter scale; defaults to half the smallest gap along each path.
    pub scale: FilterScale,
    /// Steps per edge for the transported tiling; `None` skips it.
    pub tiling_steps: Option<usize>,
}

/// `σ_xy = 2 a` where `γ(r) = a r² + O(r⁴)` is the loop phase; `a` is
/// extrapolated from radii `r` and `r/2`.
pub fn hall_conductance(family: &dyn FluxFamily, opts: &HallOptions, solver: &SolverOptions) -> Result<(HallResult, FluxGrid)> {
    let grid = berry_curvature_grid(family, opts.n, solver)?;
    let (chern, chern_deviation) = chern_number(&grid)?;
    let r = opts.radius.unwrap_or(TAU / opts.n as f64);
    if !(r > 0.0) {
        return Err(Error::invalid("loop radius must be positive"));
    }
    let f0 = grid.curvature_at(0, 0);
    let at = |rad: f64| {
        qa_loop_phase(family, LoopSpec { center: (0.0, 0.0), radius: rad, clockwise: false }, opts.steps, opts.scale, Some(f0))
    };
    let loop_full = at(r)?;
    let loop_half = at(r / 2.0)?;
    let a = (16.0 * loop_half.phase - loop_full.phase) / (3.0 * r * r);
    let sigma_xy = 2.0 * a;
    let nearest = sigma_xy.round();
    let transported_stokes_deviation = match opts.tiling_steps {
        Some(s) => {
            let total: f64 = transported_tiling(family, opts.n, s, opts.scale)?.iter().sum();
            Some((total - TAU * (total / TAU).round()).abs())
        }
        None => None,
    };
    let result = HallResult {
        sigma_xy,
        nearest_integer: nearest as i64,
        certificate: (sigma_xy - nearest).abs(),
        integers_agree: nearest as i64 == chern,
        chern,
        chern_deviation,
        stokes_deviation: grid.stokes_deviation(),
        transported_stokes_deviation,
        min_gap: grid.min_gap.min(loop_full.min_gap).min(loop_half.min_gap),
        loop_full,
        loop_half,
    };
    Ok((result, grid))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_level_curvature(m: f64, th: f64, ph: f64) -> f64 {
        // Lower-band curvature -d·(∂_θ d × ∂_φ d) / (2|d|³) in link orientation.
        let d = [th.sin(), ph.sin(), m + th.cos() + ph.cos()];
        let a = [th.cos(), 0.0, -th.sin()];
        let b = [0.0, ph.cos(), -ph.sin()];
        let cross = [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
        let dn = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        let triple = d[0] * cross[0] + d[1] * cross[1] + d[2] * cross[2];
        triple / (2.0 * dn.powi(3))
    }

    #[test]
    fn two_level_chern_is_quantized() {
        let fam = TwoLevelFamily::new(None);
        let g = berry_curvature_grid(&fam, 20, &SolverOptions::default()).unwrap();
        let (c, dev) = chern_number(&g).unwrap();
        assert_eq!(c.abs(), 1);
        assert!(dev < 1e-10 && !g.under_resolved);
        let g2 = berry_curvature_grid(&fam, 40, &SolverOptions::default()).unwrap();
        assert_eq!(chern_number(&g2).unwrap().0, c);
        let trivial = berry_curvature_grid(&TwoLevelFamily::new(Some(3.0)), 20, &SolverOptions::default()).unwrap();
        assert_eq!(chern_number(&trivial).unwrap().0, 0);
    }

    #[test]
    fn constant_family_has_flat_curvature() {
        let h = crate::operator::diagonal(&[-1.0, 0.5, 2.0]);
        let g = berry_curvature_grid(&ConstantFamily(h), 6, &SolverOptions::default()).unwrap();
        assert!(g.plaquettes.iter().all(|&f| f == 0.0));
        assert_eq!(chern_number(&g).unwrap(), (0, 0.0));
    }

    #[test]
    fn plaquettes_are_gauge_invariant() {
        use rand::{Rng, SeedableRng};
        let g = berry_curvature_grid(&TwoLevelFamily::new(None), 8, &SolverOptions::default()).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let rotated: Vec<Array1<C64>> =
            g.states
                .iter()
                .map(|s| {
                    let w = C64::from_polar(1.0, rng.gen_range(0.0..TAU));
                    s.mapv(|z| z * w)
                })
                .collect();
        let again = plaquette_phases(&rotated, 8);
        let worst = g.plaquettes.iter().zip(&again).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-12, "{worst}");
    }

    #[test]
    fn grid_curvature_tracks_closed_form() {
        let m = TwoLevelFamily::DEFAULT_MASS;
        let g = berry_curvature_grid(&TwoLevelFamily::new(None), 40, &SolverOptions::default()).unwrap();
        let exact = two_level_curvature(m, 0.0, 0.0);
        assert!((exact.abs() - 1.0 / TAU).abs() < 1e-15);
        assert!((g.curvature_at(0, 0) - exact).abs() < 2e-2 * exact.abs());
    }

    #[test]
    fn loop_phase_matches_curvature_area() {
        let fam = TwoLevelFamily::new(None);
        let f = two_level_curvature(fam.mass, 0.0, 0.0);
        let run = |r: f64, cw: bool| {
            qa_loop_phase(&fam, LoopSpec { center: (0.0, 0.0), radius: r, clockwise: cw }, 200, FilterScale::GapFraction(0.25), Some(f)).unwrap()
        };
        let (a, b) = (run(0.1, false), run(0.05, false));
        // Remainder shrinks at least quadratically faster than the leading term.
        assert!(a.comparison.unwrap() < 1e-3, "{a:?}");
        assert!(b.comparison.unwrap() < a.comparison.unwrap() / 8.0);
        let back = run(0.1, true);
        assert!((back.phase + a.phase).abs() < 1e-8);
        let zero = run(0.0, false);
        assert!(zero.phase.abs() < 1e-8);
    }

    #[test]
    fn two_level_hall_conductance() {
        let fam = TwoLevelFamily::new(None);
        let opts = HallOptions { n: 20, radius: None, steps: 200, scale: FilterScale::GapFraction(0.25), tiling_steps: Some(8) };
        let (h, _) = hall_conductance(&fam, &opts, &SolverOptions::default()).unwrap();
        assert_eq!(h.nearest_integer.abs(), 1);
        assert!(h.certificate < 1e-3, "{h:?}");
        assert!(h.integers_agree && h.stokes_deviation < 1e-6);
        assert!(h.transported_stokes_deviation.unwrap() < 1e-2, "{h:?}");
        let trivial = ConstantFamily(TwoLevelFamily::new(None).hamiltonian(0.0, 0.0).unwrap());
        let (t, _) = hall_conductance(&trivial, &opts, &SolverOptions::default()).unwrap();
        assert_eq!(t.nearest_integer, 0);
        assert!(t.certificate < 1e-8);
    }
}
