//! Numerical counterparts of each step of the divergence argument.
//!
//! * [`certificate`]: the function `phi` and the constant `c0` that turns
//!   `c0^{log X}` into a supermartingale.
//! * [`xprocess`]: the dominated multiplicative jump process, its drift, its
//!   escape probability and a Monte-Carlo supermartingale check.
//! * [`lemmas`]: closed-form bounds and brute-force oracles for the gap
//!   lemmas, plus the combined lower bound.
//! * [`forced`]: the deterministic forced-growth construction.

pub mod certificate;
pub mod forced;
pub mod lemmas;
pub mod xprocess;

pub use certificate::{find_c0, phi, Certificate};
pub use forced::{forced_increase, ForcedIncreaseReport};
pub use lemmas::{
    align_transform, check_control_gap, check_lemma_d, lemma_initial_gap_bound,
    theorem_lower_bound, AlignResult, ControlGapCase, ControlGapOutcome, Side, TheoremBound,
};
pub use xprocess::{
    check_supermartingale, escape_probability_mc, log_drift, measure_log_drift, simulate_x,
    DriftEstimate, EscapeEstimate, SupermartingaleReport, XProcess, XTrajectory,
};
