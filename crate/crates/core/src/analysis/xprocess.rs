//! The dominated jump process: `X -> rho_minus X` at rate 2 and
//! `X -> rho_plus X` at rate 1.
//!
//! The state is carried as `ln X` so that long horizons never overflow.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::rng::{replica_rng, SimRng};
use crate::stats::{Proportion, RunningStats};

use super::certificate::{find_c0, Certificate};

const TOTAL_RATE: f64 = 3.0;
const P_DOWN: f64 = 2.0 / 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct XProcess {
    log_x: f64,
    t: f64,
    log_down: f64,
    log_up: f64,
}

impl XProcess {
    pub fn new(x0: f64, params: &ModelParams) -> Result<Self> {
        if !(x0 > 0.0 && x0.is_finite()) {
            return Err(Error::Precondition(format!("x0 must be positive, got {x0}")));
        }
        Ok(Self::from_log(x0.ln(), params))
    }

    pub fn from_log(log_x: f64, params: &ModelParams) -> Self {
        Self {
            log_x,
            t: 0.0,
            log_down: params.rho_minus().ln(),
            log_up: params.rho_plus().ln(),
        }
    }

    pub fn log_x(&self) -> f64 {
        self.log_x
    }

    pub fn x(&self) -> f64 {
        self.log_x.exp()
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    /// Next jump of the embedded chain, without advancing time.
    #[inline]
    pub fn jump<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        self.log_x += if rng.gen::<f64>() < P_DOWN {
            self.log_down
        } else {
            self.log_up
        };
    }

    /// Holding time followed by a jump; returns the jump time.
    #[inline]
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> f64 {
        self.t += Exp::new(TOTAL_RATE).expect("positive rate").sample(rng);
        self.jump(rng);
        self.t
    }

    /// Advances to time `t_end`, returning `ln X_{t_end}`.
    pub fn advance_to<R: Rng + ?Sized>(&mut self, t_end: f64, rng: &mut R) -> f64 {
        let holding = Exp::new(TOTAL_RATE).expect("positive rate");
        loop {
            let next = self.t + holding.sample(rng);
            if next > t_end {
                // Memorylessness: the overshoot is discarded and redrawn next call.
                self.t = t_end;
                return self.log_x;
            }
            self.t = next;
            self.jump(rng);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct XTrajectory {
    /// Jump times, starting with `0`.
    pub times: Vec<f64>,
    /// `ln X` right after each jump, starting with `ln x0`.
    pub log_x: Vec<f64>,
    pub t_max: f64,
}

impl XTrajectory {
    /// `ln X_t` for `0 <= t <= t_max` (right-continuous).
    pub fn log_at(&self, t: f64) -> f64 {
        let idx = self.times.partition_point(|&s| s <= t);
        self.log_x[idx.saturating_sub(1)]
    }
}

/// Exact jump-chain simulation up to `t_max`.
pub fn simulate_x<R: Rng + ?Sized>(
    x0: f64,
    params: &ModelParams,
    t_max: f64,
    rng: &mut R,
) -> Result<XTrajectory> {
    let mut x = XProcess::new(x0, params)?;
    let mut times = vec![0.0];
    let mut log_x = vec![x.log_x()];
    let holding = Exp::new(TOTAL_RATE).expect("positive rate");
    loop {
        let next = x.t + holding.sample(rng);
        if next > t_max {
            break;
        }
        x.t = next;
        x.jump(rng);
        times.push(next);
        log_x.push(x.log_x());
    }
    Ok(XTrajectory {
        times,
        log_x,
        t_max,
    })
}

/// Expected `ln X_t - ln X_0` per unit time: `2 ln rho_minus + ln rho_plus`.
pub fn log_drift(params: &ModelParams) -> f64 {
    2.0 * params.rho_minus().ln() + params.rho_plus().ln()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftEstimate {
    pub times: Vec<f64>,
    pub mean_log_increment: Vec<f64>,
    pub std_error: Vec<f64>,
    /// Least-squares slope through the origin of the mean increments.
    pub slope: f64,
    pub expected_slope: f64,
    pub replicas: u64,
}

/// Monte-Carlo estimate of `E[ln X_t - ln X_0]` on `n_points` equally spaced
/// times in `(0, horizon]`.
pub fn measure_log_drift(
    params: &ModelParams,
    horizon: f64,
    n_points: usize,
    replicas: u64,
    seed: u64,
) -> Result<DriftEstimate> {
    if !(horizon > 0.0) || n_points == 0 || replicas == 0 {
        return Err(Error::Precondition("need horizon > 0, n_points > 0 and replicas > 0".into()));
    }
    let times: Vec<f64> = (1..=n_points).map(|k| horizon * k as f64 / n_points as f64).collect();
    let mut acc = vec![RunningStats::default(); n_points];
    for r in 0..replicas {
        let mut rng = replica_rng(seed, r);
        let mut x = XProcess::from_log(0.0, params);
        for (k, &t) in times.iter().enumerate() {
            acc[k].push(x.advance_to(t, &mut rng));
        }
    }
    let mean: Vec<f64> = acc.iter().map(|s| s.mean()).collect();
    let sxy: f64 = times.iter().zip(&mean).map(|(t, m)| t * m).sum();
    let sxx: f64 = times.iter().map(|t| t * t).sum();
    Ok(DriftEstimate {
        slope: sxy / sxx,
        expected_slope: log_drift(params),
        std_error: acc.iter().map(|s| s.std_error()).collect(),
        mean_log_increment: mean,
        times,
        replicas,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EscapeEstimate {
    pub x0_over_d: f64,
    pub n_over_d: f64,
    pub escaped: Proportion,
    pub certificate: Certificate,
    /// `escaped.estimate + 3 sigma >= certificate.escape_bound`.
    pub consistent_with_bound: bool,
}

/// Fraction of replicas in which `X`, started at `x0_over_d * D`, reaches
/// `[N, inf)` before `(0, D]`.
///
/// Only the embedded jump chain matters for this event, so holding times are
/// not sampled.
pub fn escape_probability_mc(
    params: &ModelParams,
    x0_over_d: f64,
    n_over_d: f64,
    replicas: u64,
    seed: u64,
) -> Result<EscapeEstimate> {
    params.require_repulsion()?;
    if !(x0_over_d > 2.0) {
        return Err(Error::Precondition(format!(
            "escape bound needs X0 > 2D, got X0 = {x0_over_d} D"
        )));
    }
    if !(n_over_d >= x0_over_d) {
        return Err(Error::Precondition(format!(
            "upper barrier N = {n_over_d} D lies below X0 = {x0_over_d} D"
        )));
    }
    let certificate = find_c0(params, 1e-9)?;
    let start = x0_over_d.ln();
    let top = n_over_d.ln();
    let mut escaped = 0u64;
    for r in 0..replicas {
        let mut rng = replica_rng(seed, r);
        let mut x = XProcess::from_log(start, params);
        loop {
            if x.log_x >= top {
                escaped += 1;
                break;
            }
            if x.log_x <= 0.0 {
                break;
            }
            x.jump(&mut rng);
        }
    }
    let escaped = Proportion::new(escaped, replicas);
    Ok(EscapeEstimate {
        x0_over_d,
        n_over_d,
        consistent_with_bound: escaped.estimate + 3.0 * escaped.std_error
            >= certificate.escape_bound,
        escaped,
        certificate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupermartingaleReport {
    pub c0: f64,
    pub phi_value: f64,
    /// `E[Y'/Y]` over one jump, from the two possible post-jump states.
    pub one_jump_ratio: f64,
    /// `(phi(c0) + 3) / 3`.
    pub one_jump_identity: f64,
    pub identity_error: f64,
    pub times: Vec<f64>,
    pub mean_y: Vec<f64>,
    pub std_error_y: Vec<f64>,
    /// Largest standardized increase `(E[Y_{k+1} - Y_k]) / se` across the grid.
    pub worst_increase_sigma: f64,
    pub non_increasing: bool,
    pub replicas: u64,
}

/// Checks `Y_t = c0^{ln X_t}` for the supermartingale property, exactly over
/// one jump and by Monte Carlo over `[0, horizon]` with `X_0 = 1`.
pub fn check_supermartingale(
    params: &ModelParams,
    c0: f64,
    replicas: u64,
    horizon: f64,
    n_points: usize,
    seed: u64,
) -> Result<SupermartingaleReport> {
    let phi_value = super::certificate::phi(c0, params)?;
    if phi_value > 0.0 {
        return Err(Error::Precondition(format!(
            "phi(c0) = {phi_value} > 0: c0 = {c0} does not certify a supermartingale"
        )));
    }
    if replicas < 2 || n_points == 0 || !(horizon > 0.0) {
        return Err(Error::Precondition("need replicas >= 2, n_points > 0, horizon > 0".into()));
    }
    let ln_c0 = c0.ln();
    let y_of = |log_x: f64| (ln_c0 * log_x).exp();

    // One jump from an arbitrary state, through the actual state update.
    let base = XProcess::from_log(0.7, params);
    let (mut down, mut up) = (base, base);
    down.log_x += base.log_down;
    up.log_x += base.log_up;
    let y0 = y_of(base.log_x);
    let one_jump_ratio = P_DOWN * y_of(down.log_x) / y0 + (1.0 - P_DOWN) * y_of(up.log_x) / y0;
    let one_jump_identity = (phi_value + 3.0) / 3.0;

    let times: Vec<f64> = (0..=n_points).map(|k| horizon * k as f64 / n_points as f64).collect();
    let mut level = vec![RunningStats::default(); times.len()];
    let mut increment = vec![RunningStats::default(); n_points];
    for r in 0..replicas {
        let mut rng = replica_rng(seed, r);
        let mut x = XProcess::from_log(0.0, params);
        let mut prev = y_of(0.0);
        level[0].push(prev);
        for k in 1..times.len() {
            let y = y_of(x.advance_to(times[k], &mut rng));
            level[k].push(y);
            increment[k - 1].push(y - prev);
            prev = y;
        }
    }
    let worst_increase_sigma = increment
        .iter()
        .map(|s| {
            let se = s.std_error();
            if se > 0.0 {
                s.mean() / se
            } else if s.mean() > 0.0 {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            }
        })
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(SupermartingaleReport {
        c0,
        phi_value,
        one_jump_ratio,
        one_jump_identity,
        identity_error: (one_jump_ratio - one_jump_identity).abs(),
        mean_y: level.iter().map(|s| s.mean()).collect(),
        std_error_y: level.iter().map(|s| s.std_error()).collect(),
        times,
        non_increasing: worst_increase_sigma <= 3.0,
        worst_increase_sigma,
        replicas,
    })
}

/// Convenience: one trajectory from replica `replica` of `seed`.
pub fn simulate_x_replica(
    x0: f64,
    params: &ModelParams,
    t_max: f64,
    seed: u64,
    replica: u64,
) -> Result<XTrajectory> {
    let mut rng: SimRng = replica_rng(seed, replica);
    simulate_x(x0, params, t_max, &mut rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn canonical() -> ModelParams {
        ModelParams::new(1.0, 0.5, 0.25).unwrap()
    }

    #[test]
    fn drift_constant() {
        assert!((log_drift(&canonical()) - 0.097_163_748_453_647_67).abs() < 1e-15);
    }

    #[test]
    fn degenerate_factors_keep_x_constant() {
        let p = ModelParams::new(1.0, 0.5, 0.0).unwrap();
        let traj = simulate_x_replica(3.0, &p, 20.0, 1, 0).unwrap();
        assert!(traj.times.len() > 10);
        assert!(traj.log_x.iter().all(|&l| l == 3f64.ln()));
    }

    #[test]
    fn same_seed_same_trajectory() {
        let a = simulate_x_replica(1.0, &canonical(), 30.0, 5, 2).unwrap();
        let b = simulate_x_replica(1.0, &canonical(), 30.0, 5, 2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn trajectory_jumps_by_rho_factors() {
        let p = canonical();
        let traj = simulate_x_replica(2.0, &p, 50.0, 9, 0).unwrap();
        let (ld, lu) = (p.rho_minus().ln(), p.rho_plus().ln());
        for w in traj.log_x.windows(2) {
            let d = w[1] - w[0];
            assert!((d - ld).abs() < 1e-12 || (d - lu).abs() < 1e-12);
        }
        assert_eq!(traj.log_at(0.0), 2f64.ln());
        assert_eq!(traj.log_at(50.0), *traj.log_x.last().unwrap());
    }

    #[test]
    fn rejects_nonpositive_start() {
        assert!(simulate_x_replica(0.0, &canonical(), 1.0, 1, 0).is_err());
    }

    #[test]
    fn escape_preconditions() {
        let p = canonical();
        assert!(escape_probability_mc(&p, 2.0, 1000.0, 10, 1).is_err());
        assert!(escape_probability_mc(&p, 3.0, 2.5, 10, 1).is_err());
        let trivial = escape_probability_mc(&p, 3.0, 3.0, 100, 1).unwrap();
        assert_eq!(trivial.escaped.estimate, 1.0);
    }

    #[test]
    fn one_jump_identity_exact() {
        let p = canonical();
        for c0 in [0.2, 0.5, (-1f64).exp() + 1e-6, 0.9] {
            if crate::analysis::phi(c0, &p).unwrap() > 0.0 {
                continue;
            }
            let rep = check_supermartingale(&p, c0, 2, 1.0, 1, 0).unwrap();
            assert!(rep.identity_error < 1e-12, "c0 {c0}: {}", rep.identity_error);
        }
    }

    #[test]
    fn c0_one_is_trivial_martingale() {
        let rep = check_supermartingale(&canonical(), 1.0, 100, 5.0, 5, 3).unwrap();
        assert!(rep.mean_y.iter().all(|&y| y == 1.0));
        assert!(rep.non_increasing);
    }

    #[test]
    fn positive_phi_rejected() {
        assert!(check_supermartingale(&canonical(), 0.3, 10, 1.0, 1, 0).is_err());
    }
}
