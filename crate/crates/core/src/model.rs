//! Model parameters and the two-sided pairwise interaction rule.

use serde::Serialize;

use crate::error::{Error, Result};

/// Validated model parameters together with the constants derived from them.
///
/// `rho_minus`, `rho_plus`, `d` and `k` are the multipliers and thresholds that
/// drive the divergence argument: a tracked gap above `d` shrinks by at most a
/// factor `rho_minus` under a flanking interaction and grows by `rho_plus`
/// under a repulsive interaction along its own edge. `d` and `k` only exist
/// when repulsion is switched on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams {
    theta: f64,
    mu_minus: f64,
    mu_plus: f64,
    rho_minus: f64,
    rho_plus: f64,
    d: Option<f64>,
    k: Option<u32>,
}

impl ModelParams {
    pub fn new(theta: f64, mu_minus: f64, mu_plus: f64) -> Result<Self> {
        if !(theta.is_finite() && theta > 0.0 && theta < 2.0) {
            return Err(Error::InvalidParameter(format!(
                "confidence threshold must satisfy 0 < theta < 2, got {theta}"
            )));
        }
        if !(mu_minus.is_finite() && mu_minus > 0.0 && mu_minus <= 0.5) {
            return Err(Error::InvalidParameter(format!(
                "convergent parameter must satisfy 0 < mu_minus <= 1/2, got {mu_minus}"
            )));
        }
        if !(mu_plus.is_finite() && (0.0..=0.5).contains(&mu_plus)) {
            return Err(Error::InvalidParameter(format!(
                "divergent parameter must satisfy 0 <= mu_plus <= 1/2, got {mu_plus}"
            )));
        }
        Ok(Self::derive(theta, mu_minus, mu_plus))
    }

    fn derive(theta: f64, mu_minus: f64, mu_plus: f64) -> Self {
        let rho_minus = (1.0 + 2.0 * mu_plus) / (1.0 + 3.0 * mu_plus);
        let rho_plus = 1.0 + 2.0 * mu_plus;
        let (d, k) = if mu_plus > 0.0 {
            // (3 + 1/mu_plus) mu_minus theta == mu_minus theta / (1 - rho_minus),
            // but the left form is exact for dyadic inputs.
            let d = (3.0 + 1.0 / mu_plus) * mu_minus * theta;
            let raw = ((2.0 * d / theta).ln() / rho_plus.ln()).ceil();
            let mut k = if raw < 1.0 { 1 } else { raw as u32 };
            while theta * rho_plus.powi(k as i32) < 2.0 * d {
                k += 1;
            }
            (Some(d), Some(k))
        } else {
            (None, None)
        };
        Self {
            theta,
            mu_minus,
            mu_plus,
            rho_minus,
            rho_plus,
            d,
            k,
        }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn mu_minus(&self) -> f64 {
        self.mu_minus
    }

    pub fn mu_plus(&self) -> f64 {
        self.mu_plus
    }

    /// Worst-case contraction of a large tracked gap under a flanking event.
    pub fn rho_minus(&self) -> f64 {
        self.rho_minus
    }

    /// Growth factor of a gap under repulsion along its own edge.
    pub fn rho_plus(&self) -> f64 {
        self.rho_plus
    }

    /// Gap level above which a tracked gap dominates the multiplicative process.
    pub fn d(&self) -> Option<f64> {
        self.d
    }

    /// Number of repulsive interactions that lift a gap just above `theta`
    /// past `2 d`. Never smaller than one.
    pub fn k(&self) -> Option<u32> {
        self.k
    }

    /// With `mu_plus == 0` the dynamics is the original bounded-confidence model.
    pub fn is_classic(&self) -> bool {
        self.mu_plus == 0.0
    }

    pub(crate) fn require_repulsion(&self) -> Result<f64> {
        self.d.ok_or_else(|| {
            Error::Precondition("operation requires mu_plus > 0 (D and K undefined)".into())
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Attraction,
    Repulsion,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InteractionOutcome {
    pub new_left: f64,
    pub new_right: f64,
    pub branch: Branch,
}

/// Applies one interaction between neighbors holding opinions `a` and `b`.
///
/// Opinions within `theta` of each other (inclusive) compromise by `mu_minus`;
/// otherwise they are pushed apart by `mu_plus`.
#[inline]
pub fn interact(a: f64, b: f64, params: &ModelParams) -> InteractionOutcome {
    let diff = b - a;
    if diff.abs() <= params.theta {
        let shift = params.mu_minus * diff;
        InteractionOutcome {
            new_left: a + shift,
            new_right: b - shift,
            branch: Branch::Attraction,
        }
    } else {
        let shift = params.mu_plus * diff;
        InteractionOutcome {
            new_left: a - shift,
            new_right: b + shift,
            branch: Branch::Repulsion,
        }
    }
}
