//! Closed-form bounds and brute-force oracles for the gap lemmas.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{interact, Branch, ModelParams};
use crate::rng::replica_rng;
use crate::stats::Proportion;

use super::certificate::find_c0;

/// `(1/2 - theta/4)^2 (theta/4)^2`: lower bound on the probability that an
/// edge starts with a gap above `theta` while both neighboring edges start
/// below it.
pub fn lemma_initial_gap_bound(theta: f64) -> f64 {
    let outer = 0.5 - theta / 4.0;
    let inner = theta / 4.0;
    outer * outer * inner * inner
}

/// Samples four i.i.d. uniform `[-1, 1]` opinions at consecutive sites and
/// counts the event `gap(e - 1) < theta < gap(e)` and `gap(e + 1) < theta`.
pub fn initial_gap_event_mc(theta: f64, samples: u64, seed: u64) -> Proportion {
    // Split across a few streams so large sample counts stay reproducible in chunks.
    const CHUNK: u64 = 1 << 20;
    let mut hits = 0u64;
    let mut done = 0u64;
    let mut chunk = 0u64;
    while done < samples {
        let n = CHUNK.min(samples - done);
        let mut rng = replica_rng(seed, chunk);
        for _ in 0..n {
            let x: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..=1.0));
            let left = (x[1] - x[0]).abs();
            let mid = (x[2] - x[1]).abs();
            let right = (x[3] - x[2]).abs();
            hits += u64::from(left < theta && right < theta && mid > theta);
        }
        done += n;
        chunk += 1;
    }
    Proportion::new(hits, samples)
}

/// `e^{-5} / k!`: probability of exactly `k` rate-one clock rings on an edge
/// and none on the four nearest edges during one time unit.
pub fn forced_window_probability(k: u32) -> f64 {
    let factorial: f64 = (1..=k).map(f64::from).product();
    (-5f64).exp() / factorial
}

/// Direct sampling of five independent Poisson(1) counts.
pub fn forced_window_probability_mc(k: u32, draws: u64, seed: u64) -> Proportion {
    const CHUNK: u64 = 1 << 22;
    let poisson = Poisson::new(1.0).expect("positive mean");
    let mut hits = 0u64;
    let mut done = 0u64;
    let mut chunk = 0u64;
    while done < draws {
        let n = CHUNK.min(draws - done);
        let mut rng = replica_rng(seed, chunk);
        for _ in 0..n {
            let centre: f64 = poisson.sample(&mut rng);
            if centre as u32 != k {
                continue;
            }
            hits += u64::from((0..4).all(|_| poisson.sample(&mut rng) == 0.0));
        }
        done += n;
        chunk += 1;
    }
    Proportion::new(hits, draws)
}

/// `g - mu_minus theta > rho_minus g`, which holds for every `g > D`.
pub fn check_lemma_d(g: f64, params: &ModelParams) -> Result<bool> {
    params.require_repulsion()?;
    Ok(g - params.mu_minus() * params.theta() > params.rho_minus() * g)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlignResult {
    pub b_prime: f64,
    pub c_prime: f64,
    /// `max(|a - b'|, |b' - c'|) / |a - b|`.
    pub ratio: f64,
}

/// Pushes `b > c` apart by `mu_plus` and measures how much of the gap `a - b`
/// survives in the larger of the two resulting gaps.
pub fn align_transform(a: f64, b: f64, c: f64, mu_plus: f64) -> Result<AlignResult> {
    if !(a > b && b > c) {
        return Err(Error::Precondition(format!("need a > b > c, got ({a}, {b}, {c})")));
    }
    if !(mu_plus > 0.0) {
        return Err(Error::Precondition(format!("need mu_plus > 0, got {mu_plus}")));
    }
    let b_prime = b - mu_plus * (c - b);
    let c_prime = c - mu_plus * (b - c);
    let ratio = (a - b_prime).abs().max((b_prime - c_prime).abs()) / (a - b).abs();
    Ok(AlignResult {
        b_prime,
        c_prime,
        ratio,
    })
}

/// Which side of the tracked edge the interaction happens on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

/// The four configurations of a flanking interaction, in a frame where the
/// far endpoint `a` of the tracked edge lies above the shared endpoint `b`
/// and `c` is the opinion across the interacting edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlGapCase {
    /// `c > b + theta`.
    RepulsionUp,
    /// `b <= c <= b + theta`.
    AttractionUp,
    /// `b - theta <= c < b`.
    AttractionDown,
    /// `c < b - theta`.
    RepulsionDown,
}

impl ControlGapCase {
    pub const ALL: [ControlGapCase; 4] = [
        ControlGapCase::RepulsionUp,
        ControlGapCase::AttractionUp,
        ControlGapCase::AttractionDown,
        ControlGapCase::RepulsionDown,
    ];

    fn classify(delta: f64, theta: f64) -> Self {
        if delta > theta {
            ControlGapCase::RepulsionUp
        } else if delta >= 0.0 {
            ControlGapCase::AttractionUp
        } else if delta >= -theta {
            ControlGapCase::AttractionDown
        } else {
            ControlGapCase::RepulsionDown
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ControlGapOutcome {
    pub case: ControlGapCase,
    pub branch: Branch,
    pub pre_gap: f64,
    pub post_max: f64,
    /// `post_max / pre_gap`.
    pub ratio: f64,
    pub holds: bool,
}

/// Applies an interaction next to a large gap and checks that the largest gap
/// in the three-edge window stays above `rho_minus` times the old gap.
///
/// `opinions` are four consecutive sites; the tracked edge joins sites 1 and
/// 2. `Side::Left` interacts sites 0 and 1, `Side::Right` sites 2 and 3.
/// Comparisons allow a relative slack of `1e-12`.
pub fn check_control_gap(
    opinions: [f64; 4],
    side: Side,
    params: &ModelParams,
) -> Result<ControlGapOutcome> {
    let d = params.require_repulsion()?;
    let pre_gap = (opinions[2] - opinions[1]).abs();
    if !(pre_gap > d) {
        return Err(Error::Precondition(format!(
            "tracked gap {pre_gap} does not exceed D = {d}"
        )));
    }
    let mut post = opinions;
    let (far, shared, across) = match side {
        Side::Left => (2, 1, 0),
        Side::Right => (1, 2, 3),
    };
    let (lo, hi) = match side {
        Side::Left => (0, 1),
        Side::Right => (2, 3),
    };
    let out = interact(opinions[lo], opinions[hi], params);
    post[lo] = out.new_left;
    post[hi] = out.new_right;

    let orient = if opinions[far] > opinions[shared] { 1.0 } else { -1.0 };
    let delta = orient * (opinions[across] - opinions[shared]);
    let case = ControlGapCase::classify(delta, params.theta());

    let post_max = (0..3).map(|i| (post[i + 1] - post[i]).abs()).fold(0.0, f64::max);
    let floor = params.rho_minus() * pre_gap;
    Ok(ControlGapOutcome {
        case,
        branch: out.branch,
        pre_gap,
        post_max,
        ratio: post_max / pre_gap,
        holds: post_max >= floor * (1.0 - 1e-12),
    })
}

/// Draws a configuration for [`check_control_gap`] falling in `case`.
///
/// The tracked gap is uniform on `(D, 10 D)`, the shared endpoint uniform on
/// `[-1, 1]`, and the orientation and side are fair coins. The offset of the
/// opinion across the interacting edge is uniform on the case's range,
/// truncated to `10 D` for the unbounded ones; in the last case one draw in
/// four sits exactly on the locus where the worst-case ratio is attained, when
/// that locus lies inside the case. The site beyond the far endpoint is
/// uniform within `2 D` of it.
pub fn sample_control_gap_instance<R: Rng + ?Sized>(
    case: ControlGapCase,
    params: &ModelParams,
    rng: &mut R,
) -> Result<([f64; 4], Side)> {
    let d = params.require_repulsion()?;
    let theta = params.theta();
    let gap = loop {
        let g = rng.gen_range(d..10.0 * d);
        if g > d {
            break g;
        }
    };
    let shared: f64 = rng.gen_range(-1.0..=1.0);
    let orient = if rng.gen::<bool>() { 1.0 } else { -1.0 };
    let side = if rng.gen::<bool>() { Side::Left } else { Side::Right };

    let delta = match case {
        ControlGapCase::RepulsionUp => loop {
            let x = rng.gen_range(theta..theta + 10.0 * d);
            if x > theta {
                break x;
            }
        },
        ControlGapCase::AttractionUp => rng.gen_range(0.0..=theta),
        ControlGapCase::AttractionDown => loop {
            let x = rng.gen_range(-theta..=0.0);
            if x < 0.0 {
                break x;
            }
        },
        ControlGapCase::RepulsionDown => {
            let locus = -gap / (1.0 + 3.0 * params.mu_plus());
            if locus < -theta && rng.gen_range(0..4) == 0 {
                locus
            } else {
                loop {
                    let x = rng.gen_range(-theta - 10.0 * d..-theta);
                    if x < -theta {
                        break x;
                    }
                }
            }
        }
    };

    let far = shared + orient * gap;
    let across = shared + orient * delta;
    let beyond = far + rng.gen_range(-2.0 * d..=2.0 * d);
    let opinions = match side {
        Side::Right => [beyond, far, shared, across],
        Side::Left => [across, shared, far, beyond],
    };
    Ok((opinions, side))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TheoremBound {
    pub initial_gap_factor: f64,
    pub k: u32,
    pub clock_factor: f64,
    pub escape_factor: f64,
    /// Product of the three factors: a lower bound on the probability that
    /// the gap followed by a tracker diverges.
    pub total: f64,
}

pub fn theorem_lower_bound(params: &ModelParams) -> Result<TheoremBound> {
    params.require_repulsion()?;
    let k = params.k().expect("defined with repulsion");
    let initial_gap_factor = lemma_initial_gap_bound(params.theta());
    let clock_factor = forced_window_probability(k);
    let escape_factor = find_c0(params, 1e-9)?.escape_bound;
    Ok(TheoremBound {
        initial_gap_factor,
        k,
        clock_factor,
        escape_factor,
        total: initial_gap_factor * clock_factor * escape_factor,
    })
}
