//! Twisted boundary conditions.
//!
//! Along a periodic direction of length `L` there are two cuts: cut 0
//! between coordinates `L-1` and `0`, and the middle cut between `m-1` and
//! `m` with `m = ceil(L/2)`. Terms assigned to cut 0 are conjugated by
//! `exp(i θ Q_left)`, terms assigned to the middle cut by `exp(-i θ' Q_left)`,
//! where `Q_left` is the charge on coordinates `[0, m)`.
//!
//! A term whose minimal covering arc contains a cut belongs to that cut.
//! Other terms belong to the cut whose column (`0` or `m`) lies within the
//! range `R` of the term; when both do, the nearer column wins and ties go
//! to cut 0.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::{strength_and_range, TermSum};
use crate::charge::ChargeSpec;
use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::operator::LocalTerm;

/// Twist angles in radians, reduced to `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TwistSpec {
    #[serde(default)]
    pub theta: f64,
    #[serde(default)]
    pub theta_prime: f64,
    #[serde(default)]
    pub phi: f64,
    #[serde(default)]
    pub phi_prime: f64,
}

impl TwistSpec {
    pub fn new(theta: f64, theta_prime: f64, phi: f64, phi_prime: f64) -> Self {
        TwistSpec {
            theta: theta.rem_euclid(TAU),
            theta_prime: theta_prime.rem_euclid(TAU),
            phi: phi.rem_euclid(TAU),
            phi_prime: phi_prime.rem_euclid(TAU),
        }
    }

    /// Twist along the translation direction only.
    pub fn chain(theta: f64, theta_prime: f64) -> Self {
        TwistSpec::new(theta, theta_prime, 0.0, 0.0)
    }

    /// Fluxes `(θ, φ)` on the torus with no auxiliary twists.
    pub fn flux(theta: f64, phi: f64) -> Self {
        TwistSpec::new(theta, 0.0, phi, 0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.theta == 0.0 && self.theta_prime == 0.0 && self.phi == 0.0 && self.phi_prime == 0.0
    }
}

/// Selects one twist angle, e.g. for derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TwistAngle {
    Theta,
    ThetaPrime,
    Phi,
    PhiPrime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Cut {
    Zero,
    Middle,
    Neither,
}

struct Direction {
    period: usize,
    mid: usize,
    second: bool,
}

impl Direction {
    fn coord(&self, h: &TermSum, site: usize) -> usize {
        let (i, v) = h.lattice().coord(site);
        if self.second {
            v
        } else {
            i
        }
    }

    fn circ(&self, a: usize, b: usize) -> usize {
        let d = a.abs_diff(b);
        d.min(self.period - d)
    }

    fn assign(&self, coords: &[usize], range: usize) -> Result<Cut> {
        let mut c: Vec<usize> = coords.to_vec();
        c.sort_unstable();
        c.dedup();
        let p = self.period;
        let (start, len) = if c.len() <= 1 {
            (c.first().copied().unwrap_or(0), 0)
        } else {
            let gaps: Vec<usize> = (0..c.len())
                .map(|k| if k + 1 < c.len() { c[k + 1] - c[k] } else { c[0] + p - c[k] })
                .collect();
            let g = *gaps.iter().max().expect("nonempty");
            if gaps.iter().filter(|&&x| x == g).count() > 1 {
                return Err(Error::unsupported(format!(
                    "term on coordinates {c:?} has no unique covering arc on a cycle of length {p}"
                )));
            }
            let k = gaps.iter().position(|&x| x == g).expect("present");
            (c[(k + 1) % c.len()], p - g)
        };
        let crosses = |x: usize| {
            let off = (x + p - start) % p;
            off >= 1 && off <= len
        };
        match (crosses(0), crosses(self.mid)) {
            (true, true) => Err(Error::unsupported(format!(
                "term on coordinates {c:?} crosses both cuts of a cycle of length {p}"
            ))),
            (true, false) => Ok(Cut::Zero),
            (false, true) => Ok(Cut::Middle),
            (false, false) => {
                let d0 = c.iter().map(|&x| self.circ(x, 0)).min().unwrap_or(usize::MAX);
                let dm = c.iter().map(|&x| self.circ(x, self.mid)).min().unwrap_or(usize::MAX);
                Ok(match (d0 <= range, dm <= range) {
                    (true, true) if dm < d0 => Cut::Middle,
                    (true, _) => Cut::Zero,
                    (false, true) => Cut::Middle,
                    (false, false) => Cut::Neither,
                })
            }
        }
    }
}

/// Per-term multiplier of matrix element `(r, c)` given the left-half charge
/// difference along each active direction.
type ElementMap<'a> = dyn Fn(&[i64], &[Cut]) -> C64 + 'a;

fn transform(h: &TermSum, charge: &ChargeSpec, dirs: &[Direction], f: &ElementMap) -> Result<TermSum> {
    charge.require_u1()?;
    let lat = h.lattice();
    if charge.n_sites() != lat.n_sites() {
        return Err(Error::invalid("charge does not match the lattice"));
    }
    let (_, range) = strength_and_range(h)?;
    let mut out = Vec::with_capacity(h.len());
    for t in h.terms() {
        let cuts: Vec<Cut> = dirs
            .iter()
            .map(|d| {
                let coords: Vec<usize> = t.sites().iter().map(|&s| d.coord(h, s)).collect();
                d.assign(&coords, range)
            })
            .collect::<Result<_>>()?;
        let ld = t.matrix().nrows();
        // Left-half charge of each local basis state, per direction.
        let q_left: Vec<Vec<i64>> = (0..ld)
            .map(|l| {
                let digits = t.local_digits(l);
                dirs.iter()
                    .map(|d| {
                        t.sites()
                            .iter()
                            .zip(&digits)
                            .filter(|(&s, _)| d.coord(h, s) < d.mid)
                            .map(|(&s, &dg)| charge.local(s)[dg])
                            .sum()
                    })
                    .collect()
            })
            .collect();
        let mut m = t.matrix().clone();
        let mut dq = vec![0i64; dirs.len()];
        for ((r, c), v) in m.indexed_iter_mut() {
            for k in 0..dirs.len() {
                dq[k] = q_left[r][k] - q_left[c][k];
            }
            *v *= f(&dq, &cuts);
        }
        out.push(LocalTerm::new(m, t.sites(), lat)?);
    }
    Ok(TermSum::from_terms(lat.clone(), out))
}

fn directions(h: &TermSum, second: bool) -> Result<Vec<Direction>> {
    let lat = h.lattice();
    let l = lat.cycle_period().ok_or_else(|| Error::unsupported("twists need a periodic direction"))?;
    let mut dirs = vec![Direction { period: l, mid: l.div_ceil(2), second: false }];
    if second {
        let ly = lat
            .second_period()
            .ok_or_else(|| Error::unsupported("flux torus needs a second periodic direction"))?;
        dirs.push(Direction { period: ly, mid: ly.div_ceil(2), second: true });
    }
    Ok(dirs)
}

/// `exp(i a)` with `a` reduced first, so whole turns give exactly one.
fn phase(a: f64) -> C64 {
    C64::from_polar(1.0, a.rem_euclid(TAU))
}

fn angle(cut: Cut, a: f64, a_prime: f64) -> f64 {
    match cut {
        Cut::Zero => a,
        Cut::Middle => -a_prime,
        Cut::Neither => 0.0,
    }
}

/// `H_{θ,θ'}` along the translation direction; `φ` angles are ignored.
pub fn twisted_hamiltonian(h: &TermSum, charge: &ChargeSpec, twist: &TwistSpec) -> Result<TermSum> {
    let dirs = directions(h, false)?;
    let (t, tp) = (twist.theta, twist.theta_prime);
    transform(h, charge, &dirs, &|dq, cuts| phase(angle(cuts[0], t, tp) * dq[0] as f64))
}

/// `H_{θ,φ}` (with auxiliary `θ'`, `φ'`) on a torus; the second direction
/// uses the charge on the lower half of the second coordinate.
pub fn flux_torus_hamiltonian(h: &TermSum, charge: &ChargeSpec, twist: &TwistSpec) -> Result<TermSum> {
    let dirs = directions(h, true)?;
    let tw = *twist;
    transform(h, charge, &dirs, &|dq, cuts| {
        let a = angle(cuts[0], tw.theta, tw.theta_prime) * dq[0] as f64
            + angle(cuts[1], tw.phi, tw.phi_prime) * dq[1] as f64;
        phase(a)
    })
}

/// Derivative of the twisted Hamiltonian with respect to one angle.
pub fn twist_derivative(h: &TermSum, charge: &ChargeSpec, twist: &TwistSpec, which: TwistAngle) -> Result<TermSum> {
    let torus = matches!(which, TwistAngle::Phi | TwistAngle::PhiPrime) || h.lattice().second_period().is_some();
    let dirs = directions(h, torus)?;
    let tw = *twist;
    let (dir, cut, sign) = match which {
        TwistAngle::Theta => (0, Cut::Zero, 1.0),
        TwistAngle::ThetaPrime => (0, Cut::Middle, -1.0),
        TwistAngle::Phi => (1, Cut::Zero, 1.0),
        TwistAngle::PhiPrime => (1, Cut::Middle, -1.0),
    };
    transform(h, charge, &dirs, &|dq, cuts| {
        if cuts[dir] != cut {
            return C64::new(0.0, 0.0);
        }
        let mut a = angle(cuts[0], tw.theta, tw.theta_prime) * dq[0] as f64;
        if cuts.len() > 1 {
            a += angle(cuts[1], tw.phi, tw.phi_prime) * dq[1] as f64;
        }
        C64::new(0.0, sign * dq[dir] as f64) * phase(a)
    })
}

/// Weights selecting the sites with coordinate below `ceil(L/2)` along the
/// first (or second) direction, for use with charge diagonals.
pub fn left_half_weights(h: &TermSum, second: bool) -> Result<Vec<f64>> {
    let dirs = directions(h, second)?;
    let d = &dirs[if second { 1 } else { 0 }];
    Ok((0..h.lattice().n_sites()).map(|s| if d.coord(h, s) < d.mid { 1.0 } else { 0.0 }).collect())
}
