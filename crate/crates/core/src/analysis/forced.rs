//! Deterministic replay of the forced-growth event.
//!
//! Six sites on a segment, a gap just above `theta` on the middle edge and
//! small gaps on its neighbors. Exactly `K` interactions along the middle edge
//! and none elsewhere must push the middle gap past `2 D` while the tracker
//! started there never moves.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::events::Event;
use crate::lattice::{Boundary, OpinionLattice};
use crate::model::{interact, ModelParams};
use crate::tracker::TrackerState;

/// Middle edge of the six-site segment.
pub const FORCED_EDGE: usize = 2;

/// Relative excess of the initial middle gap over `theta`.
const INITIAL_EXCESS: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForcedIncreaseReport {
    pub k: u32,
    pub initial_opinions: Vec<f64>,
    pub final_opinions: Vec<f64>,
    pub initial_gaps: Vec<f64>,
    /// Gap on the middle edge after each forced interaction.
    pub gap_after_each: Vec<f64>,
    pub tracker_positions: Vec<usize>,
    pub final_gap: f64,
    pub theta_rho_plus_k: f64,
    pub two_d: f64,
    pub initial_event_holds: bool,
    pub tracker_fixed: bool,
    pub passed: bool,
}

/// Opinions realizing `gap(e - 1), gap(e + 1) < theta < gap(e)` on the
/// six-site segment: the middle pair sits just outside `+-theta/2` and each
/// outer neighbor is `theta/4` closer to zero.
pub fn forced_initial_opinions(theta: f64) -> Vec<f64> {
    let half = 0.5 * theta * (1.0 + INITIAL_EXCESS);
    let left = half - theta / 4.0;
    let right = -half + theta / 4.0;
    vec![left, left, half, -half, right, right]
}

/// Applies `interactions` (default `K`) interactions on the middle edge.
pub fn forced_increase(params: &ModelParams, interactions: Option<u32>) -> Result<ForcedIncreaseReport> {
    let d = params.require_repulsion()?;
    let k = interactions.unwrap_or_else(|| params.k().expect("defined with repulsion"));
    if k == 0 {
        return Err(Error::InvalidParameter("forced sequence needs at least one interaction".into()));
    }
    let theta = params.theta();
    let initial = forced_initial_opinions(theta);
    let mut lattice = OpinionLattice::from_opinions(initial.clone(), Boundary::Segment)?;
    let initial_gaps: Vec<f64> = lattice.gaps().collect();
    let initial_event_holds = initial_gaps[FORCED_EDGE - 1] < theta
        && initial_gaps[FORCED_EDGE + 1] < theta
        && initial_gaps[FORCED_EDGE] > theta;

    let mut tracker = TrackerState::new(&[FORCED_EDGE], &lattice, 1)?;
    let mut gap_after_each = Vec::with_capacity(k as usize);
    let mut tracker_positions = Vec::with_capacity(k as usize);
    for i in 0..k {
        let ev = Event {
            time: f64::from(i + 1) / f64::from(k + 1),
            edge: FORCED_EDGE,
        };
        let (l, r) = lattice.endpoints(ev.edge);
        let out = interact(lattice.opinion(l), lattice.opinion(r), params);
        lattice.set_pair(ev.edge, out.new_left, out.new_right);
        tracker.on_event(&ev, &lattice);
        gap_after_each.push(lattice.gap_unchecked(FORCED_EDGE));
        tracker_positions.push(tracker.position_of_origin(FORCED_EDGE).expect("tracked origin"));
    }

    let final_gap = lattice.gap_unchecked(FORCED_EDGE);
    let tracker_fixed = tracker_positions.iter().all(|&p| p == FORCED_EDGE);
    let two_d = 2.0 * d;
    Ok(ForcedIncreaseReport {
        k,
        initial_opinions: initial,
        final_opinions: lattice.opinions().to_vec(),
        initial_gaps,
        gap_after_each,
        tracker_positions,
        final_gap,
        theta_rho_plus_k: theta * params.rho_plus().powi(k as i32),
        two_d,
        initial_event_holds,
        tracker_fixed,
        passed: initial_event_holds && tracker_fixed && final_gap > two_d,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_forced_sequence() {
        let p = ModelParams::new(1.0, 0.5, 0.25).unwrap();
        let rep = forced_increase(&p, None).unwrap();
        assert_eq!(rep.k, 5);
        assert!(rep.initial_event_holds);
        assert!(rep.tracker_fixed);
        assert!(rep.final_gap > rep.theta_rho_plus_k);
        assert!((rep.theta_rho_plus_k - 7.59375).abs() < 1e-12);
        assert!(rep.final_gap > 7.0);
        assert!(rep.passed);
        // each step multiplies the gap by rho_plus
        let mut g = rep.initial_gaps[FORCED_EDGE];
        for &next in &rep.gap_after_each {
            assert!((next - 1.5 * g).abs() < 1e-12 * next);
            g = next;
        }
        // outer sites untouched
        assert_eq!(rep.final_opinions[0], rep.initial_opinions[0]);
        assert_eq!(rep.final_opinions[5], rep.initial_opinions[5]);
    }

    #[test]
    fn zero_interactions_rejected() {
        let p = ModelParams::new(1.0, 0.5, 0.25).unwrap();
        assert!(forced_increase(&p, Some(0)).is_err());
        assert!(forced_increase(&ModelParams::new(1.0, 0.5, 0.0).unwrap(), None).is_err());
    }

    #[test]
    fn works_across_parameter_range() {
        for theta in [0.1, 0.5, 1.0, 1.5, 1.99] {
            for mu_minus in [0.05, 0.25, 0.5] {
                for mu_plus in [0.01, 0.1, 0.5] {
                    let p = ModelParams::new(theta, mu_minus, mu_plus).unwrap();
                    let rep = forced_increase(&p, None).unwrap();
                    assert!(rep.passed, "{p:?}: {rep:?}");
                }
            }
        }
    }
}
