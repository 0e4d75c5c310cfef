use super::TermSum;
use crate::error::{Error, Result};

/// `(J, R)`: the largest term norm and the largest term diameter.
pub fn strength_and_range(h: &TermSum) -> Result<(f64, usize)> {
    let mut j: f64 = 0.0;
    let mut r = 0;
    for t in h.terms() {
        j = j.max(t.norm()?);
        r = r.max(h.lattice().diameter(t.sites()));
    }
    Ok((j, r))
}

/// `(s, v_LR)` with `s = max_i Σ_{X ∋ i} |h_X| |X| exp(mu diam X)` and `v_LR = 4 s / mu`.
pub fn lr_constants(h: &TermSum, mu: f64) -> Result<(f64, f64)> {
    if !(mu > 0.0) {
        return Err(Error::invalid(format!("mu must be positive, got {mu}")));
    }
    let lat = h.lattice();
    let mut per_site = vec![0.0; lat.n_sites()];
    for t in h.terms() {
        let w = t.norm()? * t.sites().len() as f64 * (mu * lat.diameter(t.sites()) as f64).exp();
        for &i in t.sites() {
            per_site[i] += w;
        }
    }
    let s = per_site.iter().copied().fold(0.0, f64::max);
    Ok((s, 4.0 * s / mu))
}
