use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::TermSum;
use crate::charge::{ChargeSpec, Conservation};
use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::linalg::{kron, C64};
use crate::spin::{heisenberg_bond, pauli, spin_matrices, twice_spin};

/// `q_i = S + Sz_i`, i.e. the local state index counted from `m = -S`.
fn spin_charge(lattice: &Lattice, two_s: usize) -> Result<ChargeSpec> {
    let local: Vec<i64> = (0..=two_s).map(|k| (two_s - k) as i64).collect();
    ChargeSpec::uniform(lattice, &local, Conservation::U1)
}

/// `J1 Σ S_i.S_{i+1} + J2 Σ S_i.S_{i+2}` on a spin-1/2 cycle of even length.
pub fn majumdar_ghosh(l: usize, j1: f64, j2: f64) -> Result<(TermSum, ChargeSpec)> {
    if l < 4 || !l.is_multiple_of(2) {
        return Err(Error::invalid(format!("Majumdar-Ghosh chain needs even L >= 4, got {l}")));
    }
    let lat = Lattice::cycle(l, 2)?;
    let bond = heisenberg_bond(0.5)?;
    let mut h = TermSum::new(lat.clone());
    for i in 0..l {
        h.add(&bond * C64::new(j1, 0.0), &[i, (i + 1) % l])?;
    }
    for i in 0..l {
        h.add(&bond * C64::new(j2, 0.0), &[i, (i + 2) % l])?;
    }
    Ok((h, spin_charge(&lat, 1)?))
}

/// `J Σ S_i.S_{i+1}` on a spin-`s` cycle.
pub fn heisenberg_chain(l: usize, s: f64, j: f64) -> Result<(TermSum, ChargeSpec)> {
    let two_s = twice_spin(s)?;
    if two_s == 0 {
        return Err(Error::invalid("spin must be positive"));
    }
    let lat = Lattice::cycle(l, two_s + 1)?;
    let bond = heisenberg_bond(s)?;
    let mut h = TermSum::new(lat.clone());
    for i in 0..l {
        h.add(&bond * C64::new(j, 0.0), &[i, (i + 1) % l])?;
    }
    Ok((h, spin_charge(&lat, two_s)?))
}

/// `-Σ X_i X_{i+1} - h Σ Z_i` on a cycle, with the parity charge `(1 - Z_i)/2`.
pub fn gapped_test_chain(l: usize, field: f64) -> Result<(TermSum, ChargeSpec)> {
    if !(field > 1.0) {
        return Err(Error::invalid(format!("field must exceed 1 for the gapped phase, got {field}")));
    }
    let lat = Lattice::cycle(l, 2)?;
    let (x, _, z) = pauli();
    let xx = kron(&x, &x);
    let mut h = TermSum::new(lat.clone());
    for i in 0..l {
        h.add(-&xx, &[i, (i + 1) % l])?;
    }
    for i in 0..l {
        h.add(&z * C64::new(-field, 0.0), &[i])?;
    }
    Ok((h, ChargeSpec::uniform(&lat, &[0, 1], Conservation::Parity)?))
}

/// Spin-1/2 XXZ model on an `lx x ly` torus with a random field along z:
/// `Σ_<ij> [jxy (Sx Sx + Sy Sy) + jz Sz Sz] + Σ_i h_i Sz_i`, `h_i` uniform
/// in `[-disorder, disorder]` drawn from `seed`.
pub fn xxz_torus(lx: usize, ly: usize, jxy: f64, jz: f64, disorder: f64, seed: u64) -> Result<(TermSum, ChargeSpec)> {
    if !(disorder >= 0.0) {
        return Err(Error::invalid("disorder strength must be nonnegative"));
    }
    let lat = Lattice::torus(lx, ly, 2)?;
    let (sx, sy, sz) = spin_matrices(0.5)?;
    let bond = (kron(&sx, &sx) + kron(&sy, &sy)) * C64::new(jxy, 0.0) + kron(&sz, &sz) * C64::new(jz, 0.0);
    let mut h = TermSum::new(lat.clone());
    for i in 0..lx {
        for v in 0..ly {
            let a = lat.site(i, v);
            h.add(bond.clone(), &[a, lat.site((i + 1) % lx, v)])?;
            h.add(bond.clone(), &[a, lat.site(i, (v + 1) % ly)])?;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in 0..lat.n_sites() {
        let hk = disorder * (2.0 * rng.gen::<f64>() - 1.0);
        h.add(&sz * C64::new(hk, 0.0), &[k])?;
    }
    Ok((h, spin_charge(&lat, 1)?))
}
