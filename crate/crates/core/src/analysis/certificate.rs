use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ModelParams;

/// `phi(c) = 2 c^{ln rho_minus} + c^{ln rho_plus} - 3`.
///
/// `phi(c) / 3` is the expected relative change of `c^{ln X}` per jump of the
/// dominated process, so `phi(c) < 0` certifies a supermartingale.
pub fn phi(c: f64, params: &ModelParams) -> Result<f64> {
    params.require_repulsion()?;
    if !(c > 0.0) {
        return Err(Error::Precondition(format!("phi needs c > 0, got {c}")));
    }
    Ok(phi_unchecked(c, params.rho_minus(), params.rho_plus()))
}

#[inline]
fn phi_unchecked(c: f64, rho_minus: f64, rho_plus: f64) -> f64 {
    let lc = c.ln();
    2.0 * (lc * rho_minus.ln()).exp() + (lc * rho_plus.ln()).exp() - 3.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Certificate {
    /// Root of `phi` inside `(0, 1)`.
    pub c_star: f64,
    /// Certified constant, `c_star + tol` (or slightly more) with `phi(c0) < 0`.
    pub c0: f64,
    pub phi_value: f64,
    /// `1 - c0^{ln 2}`: lower bound on the probability that the dominated
    /// process started above `2 D` escapes to infinity without dropping to `D`.
    pub escape_bound: f64,
    pub tol: f64,
}

/// Locates the root `c*` of `phi` on `(0, 1)` by bisection and returns the
/// smallest certified constant `c0 = c* + tol`.
///
/// `phi` blows up at zero, vanishes at one with positive slope, and is
/// negative strictly between its interior root and one, so the smallest
/// admissible `c0` gives the sharpest escape bound.
pub fn find_c0(params: &ModelParams, tol: f64) -> Result<Certificate> {
    params.require_repulsion()?;
    if !(tol > 0.0 && tol < 0.5) {
        return Err(Error::Precondition(format!("tolerance must lie in (0, 1/2), got {tol}")));
    }
    let (rm, rp) = (params.rho_minus(), params.rho_plus());
    let f = |c: f64| phi_unchecked(c, rm, rp);

    let hi = (1..=60)
        .map(|j| 1.0 - 0.5f64.powi(j))
        .find(|&c| f(c) < 0.0)
        .ok_or_else(|| Error::Bracketing("phi is not negative anywhere below 1".into()))?;
    let lo = (1..=1000)
        .map(|j| 0.5f64.powi(j))
        .find(|&c| f(c) > 0.0)
        .ok_or_else(|| Error::Bracketing("phi is not positive near 0".into()))?;

    let (mut lo, mut hi) = (lo, hi);
    while hi - lo > 1e-15 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let c_star = 0.5 * (lo + hi);
    let mut c0 = c_star + tol;
    while f(c0) >= 0.0 {
        c0 += tol;
        if c0 >= 1.0 {
            return Err(Error::Bracketing("no certified c0 below 1".into()));
        }
    }
    Ok(Certificate {
        c_star,
        c0,
        phi_value: f(c0),
        escape_bound: 1.0 - (2f64.ln() * c0.ln()).exp(),
        tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(mu_plus: f64) -> ModelParams {
        ModelParams::new(1.0, 0.5, mu_plus).unwrap()
    }

    #[test]
    fn phi_vanishes_at_one() {
        for mu in [0.01, 0.1, 0.25, 0.5] {
            assert_eq!(phi(1.0, &params(mu)).unwrap(), 0.0);
        }
    }

    #[test]
    fn phi_canonical_values() {
        let p = params(0.25);
        assert!((phi(0.5, &p).unwrap() - (-0.019_474_476_373_339_21)).abs() < 1e-14);
        assert!(phi(0.3, &p).unwrap() > 0.0);
        assert!(phi(0.4, &p).unwrap() < 0.0);
    }

    #[test]
    fn phi_rejects_bad_input() {
        assert!(phi(0.0, &params(0.25)).is_err());
        assert!(phi(-1.0, &params(0.25)).is_err());
        assert!(phi(0.5, &params(0.0)).is_err());
    }

    // In the variable y = -ln c, phi = 2 rho_minus^{-y} + rho_plus^{-y} - 3 and
    // rho_minus^{-1} * 2 + rho_plus^{-1} = 3 identically in mu_plus, so the
    // interior root is c* = 1/e and the escape bound at c* is exactly 1/2.
    #[test]
    fn root_is_inverse_e_for_every_mu_plus() {
        for mu in [0.01, 0.05, 0.1, 0.25, 0.4, 0.5] {
            let cert = find_c0(&params(mu), 1e-9).unwrap();
            assert!((cert.c_star - (-1f64).exp()).abs() < 1e-12, "mu {mu}: {}", cert.c_star);
            assert!(cert.phi_value < 0.0);
            assert!(cert.c0 > cert.c_star && cert.c0 < 1.0);
            assert!((cert.escape_bound - 0.5).abs() < 1e-8);
            assert!(cert.escape_bound < 0.5);
        }
    }

    #[test]
    fn canonical_certificate() {
        let cert = find_c0(&params(0.25), 1e-9).unwrap();
        assert!((cert.c_star - 0.368).abs() < 1e-3);
        assert!((cert.escape_bound - 0.50).abs() < 1e-6);
    }

    #[test]
    fn drift_condition() {
        for mu in [0.01, 0.1, 0.25, 0.5] {
            let p = params(mu);
            assert!(p.rho_minus().powi(2) * p.rho_plus() > 1.0);
            let closed = (1.0 + 6.0 * mu + 12.0 * mu * mu + 8.0 * mu.powi(3))
                / (1.0 + 6.0 * mu + 9.0 * mu * mu);
            assert!((p.rho_minus().powi(2) * p.rho_plus() - closed).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_classic_params() {
        assert!(find_c0(&params(0.0), 1e-9).is_err());
        assert!(find_c0(&params(0.25), 0.0).is_err());
    }
}
