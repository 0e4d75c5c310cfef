//! Spin-S matrices in the `|S, m>` basis ordered `m = S, S-1, ..., -S`.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::linalg::{C64, I, ZERO};

/// `(Sx, Sy, Sz)` for spin `s`, with `[Sx, Sy] = i Sz`.
pub fn spin_matrices(s: f64) -> Result<(Array2<C64>, Array2<C64>, Array2<C64>)> {
    let two_s = twice_spin(s)?;
    let n = two_s + 1;
    let mut sz = Array2::zeros((n, n));
    let mut sp = Array2::zeros((n, n));
    for k in 0..n {
        let m = s - k as f64;
        sz[[k, k]] = C64::new(m, 0.0);
        if k > 0 {
            sp[[k - 1, k]] = C64::new((s * (s + 1.0) - m * (m + 1.0)).sqrt(), 0.0);
        }
    }
    let sm = sp.t().to_owned();
    let sx = (&sp + &sm).mapv(|z| z * 0.5);
    let sy = (&sp - &sm).mapv(|z| z / (2.0 * I));
    Ok((sx, sy, sz))
}

/// `2S` as an integer; errors unless `2S` is a nonnegative integer.
pub fn twice_spin(s: f64) -> Result<usize> {
    let t = 2.0 * s;
    if !(t.is_finite() && t >= 0.0 && (t - t.round()).abs() < 1e-12) {
        return Err(Error::invalid(format!("spin {s} is not a half-integer")));
    }
    Ok(t.round() as usize)
}

/// Pauli matrices `(X, Y, Z)`.
pub fn pauli() -> (Array2<C64>, Array2<C64>, Array2<C64>) {
    let one = C64::new(1.0, 0.0);
    let x = Array2::from_shape_vec((2, 2), vec![ZERO, one, one, ZERO]).expect("shape");
    let y = Array2::from_shape_vec((2, 2), vec![ZERO, -I, I, ZERO]).expect("shape");
    let z = Array2::from_shape_vec((2, 2), vec![one, ZERO, ZERO, -one]).expect("shape");
    (x, y, z)
}

/// `S_a . S_b` on two spin-`s` sites.
pub fn heisenberg_bond(s: f64) -> Result<Array2<C64>> {
    use crate::linalg::kron;
    let (x, y, z) = spin_matrices(s)?;
    Ok(kron(&x, &x) + kron(&y, &y) + kron(&z, &z))
}
