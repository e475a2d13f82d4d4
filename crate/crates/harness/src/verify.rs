//! The `verify` subcommand: every lemma oracle, one JSON report.

use deffuant_core::analysis::lemmas::{
    forced_window_probability, forced_window_probability_mc, initial_gap_event_mc,
    sample_control_gap_instance,
};
use deffuant_core::analysis::{
    align_transform, check_control_gap, check_lemma_d, check_supermartingale, escape_probability_mc,
    find_c0, forced_increase, lemma_initial_gap_bound, measure_log_drift, theorem_lower_bound,
    ControlGapCase,
};
use deffuant_core::meanfield::{check_escalation_intervals, EscalationWitness};
use deffuant_core::rng::replica_rng;
use deffuant_core::{interact, Branch, ModelParams};
use rand::Rng;
use serde::Serialize;

use crate::analysis_cmds::{DRIFT_REL_TOL, X_GRID_POINTS};
use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::output;

pub const EXACT_TOL: f64 = 1e-12;
pub const ALIGN_MU_PLUS: [f64; 4] = [0.05, 0.1, 0.25, 0.5];

#[derive(Debug, Clone, Serialize)]
pub struct LemmaCheck {
    pub name: String,
    pub passed: bool,
    pub samples: u64,
    /// Smallest slack seen; negative means the check failed.
    pub worst_margin: f64,
}

impl LemmaCheck {
    fn new(name: impl Into<String>, samples: u64, worst_margin: f64) -> Self {
        Self {
            name: name.into(),
            passed: worst_margin >= 0.0,
            samples,
            worst_margin,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub config: ExperimentConfig,
    pub passed: bool,
    pub checks: Vec<LemmaCheck>,
}

fn scaled(base: u64, scale: f64) -> u64 {
    ((base as f64 * scale).round() as u64).max(1)
}

/// Pair sum and branch-dependent gap multiplier on random inputs.
pub fn check_interaction(samples: u64, seed: u64) -> LemmaCheck {
    let mut rng = replica_rng(seed, 0);
    let mut worst = f64::INFINITY;
    for _ in 0..samples {
        let theta = rng.gen_range(0.01..2.0);
        let mu_minus = rng.gen_range(1e-6..=0.5);
        let mu_plus = rng.gen_range(0.0..=0.5);
        let p = ModelParams::new(theta, mu_minus, mu_plus).expect("sampled in range");
        let a: f64 = rng.gen_range(-5.0..5.0);
        let b: f64 = rng.gen_range(-5.0..5.0);
        let out = interact(a, b, &p);
        let scale = a.abs() + b.abs();
        let sum_err = ((out.new_left + out.new_right) - (a + b)).abs() / scale.max(f64::MIN_POSITIVE);
        let gap = (a - b).abs();
        let mult = match out.branch {
            Branch::Attraction => 1.0 - 2.0 * mu_minus,
            Branch::Repulsion => p.rho_plus(),
        };
        let expected = mult * gap;
        let new_gap = (out.new_left - out.new_right).abs();
        let gap_err = (new_gap - expected).abs() / scale.max(f64::MIN_POSITIVE);
        worst = worst.min(EXACT_TOL - sum_err.max(gap_err));
    }
    LemmaCheck::new("interaction_exactness", samples, worst)
}

/// `ratio >= rho_minus` over a log-spaced grid of `(a - b, b - c)` for each
/// `mu_plus` in [`ALIGN_MU_PLUS`], plus equality on the worst-case locus.
pub fn check_align(points_per_axis: usize) -> (LemmaCheck, LemmaCheck) {
    let n = points_per_axis.max(2);
    let axis: Vec<f64> = (0..n).map(|i| 10f64.powf(-3.0 + 6.0 * i as f64 / (n - 1) as f64)).collect();
    let mut worst = f64::INFINITY;
    let mut worst_locus = f64::INFINITY;
    let mut samples = 0u64;
    let mut locus_samples = 0u64;
    for &mu in &ALIGN_MU_PLUS {
        let rho_minus = (1.0 + 2.0 * mu) / (1.0 + 3.0 * mu);
        for (i, &lower) in axis.iter().enumerate() {
            let c = (i % 7) as f64 - 3.0;
            let b = c + lower;
            for &upper in &axis {
                let a = b + upper;
                let r = align_transform(a, b, c, mu).expect("ordered grid").ratio;
                worst = worst.min(r - rho_minus + EXACT_TOL);
                samples += 1;
            }
            let r = align_transform(b + (1.0 + 3.0 * mu) * lower, b, c, mu).expect("ordered").ratio;
            worst_locus = worst_locus.min(1e-9 - (r - rho_minus).abs());
            locus_samples += 1;
        }
    }
    (
        LemmaCheck::new("align_ratio", samples, worst),
        LemmaCheck::new("align_equality_locus", locus_samples, worst_locus),
    )
}

/// Randomized flanking interactions, `per_case` per proof case.
pub fn check_control_gap_cases(params: &ModelParams, per_case: u64, seed: u64) -> Result<Vec<LemmaCheck>> {
    let mut checks = Vec::new();
    for (i, case) in ControlGapCase::ALL.into_iter().enumerate() {
        let mut rng = replica_rng(seed, i as u64);
        let mut worst = f64::INFINITY;
        for _ in 0..per_case {
            let (ops, side) = sample_control_gap_instance(case, params, &mut rng)?;
            let out = check_control_gap(ops, side, params)?;
            if out.case != case {
                return Err(HarnessError::Property(format!("sampler produced {:?} for {case:?}", out.case)));
            }
            let slack = out.ratio - params.rho_minus() * (1.0 - EXACT_TOL);
            worst = worst.min(if out.holds { slack.max(0.0) } else { slack.min(-f64::MIN_POSITIVE) });
        }
        let name = match case {
            ControlGapCase::RepulsionUp => "control_gap_repulsion_up",
            ControlGapCase::AttractionUp => "control_gap_attraction_up",
            ControlGapCase::AttractionDown => "control_gap_attraction_down",
            ControlGapCase::RepulsionDown => "control_gap_repulsion_down",
        };
        checks.push(LemmaCheck::new(name, per_case, worst));
    }
    Ok(checks)
}

pub fn run_verify(cfg: &ExperimentConfig) -> Result<VerifyReport> {
    let params = cfg.params()?;
    if params.mu_plus() == 0.0 {
        return Err(HarnessError::Config("verify needs mu_plus > 0".into()));
    }
    let d = params.d().expect("repulsive model");
    let s = cfg.sample_scale;
    let seed = cfg.seed;
    let mut checks = vec![check_interaction(scaled(1_000_000, s), seed)];

    let n = scaled(10_000_000, s);
    let p = initial_gap_event_mc(params.theta(), n, seed.wrapping_add(1));
    checks.push(LemmaCheck::new(
        "initial_gap",
        n,
        p.estimate + 3.0 * p.std_error - lemma_initial_gap_bound(params.theta()),
    ));

    let mut rng = replica_rng(seed.wrapping_add(2), 0);
    let n = scaled(100_000, s);
    let mut worst = f64::INFINITY;
    for _ in 0..n {
        let g = rng.gen_range(d..=100.0 * d);
        if g > d && !check_lemma_d(g, &params)? {
            worst = worst.min(-1.0);
        }
        worst = worst.min(g - params.mu_minus() * params.theta() - params.rho_minus() * g);
    }
    checks.push(LemmaCheck::new("lemma_d", n, worst));

    let per_axis = ((500.0 * s.sqrt()).round() as usize).max(2);
    let (align, locus) = check_align(per_axis);
    checks.push(align);
    checks.push(locus);

    checks.extend(check_control_gap_cases(&params, scaled(100_000, s), seed.wrapping_add(3))?);

    let forced = forced_increase(&params, None)?;
    checks.push(LemmaCheck::new(
        "forced_increase",
        u64::from(forced.k),
        if forced.passed { forced.final_gap - forced.two_d } else { -1.0 },
    ));

    let k = params.k().expect("repulsive model");
    let n = scaled(10_000_000, s);
    let w = forced_window_probability_mc(k, n, seed.wrapping_add(4));
    let exact = forced_window_probability(k);
    let sigma = (exact * (1.0 - exact) / n as f64).sqrt();
    checks.push(LemmaCheck::new("forced_window_probability", n, 3.0 * sigma - (w.estimate - exact).abs()));

    let cert = find_c0(&params, cfg.tol)?;
    checks.push(LemmaCheck::new("certificate_phi_negative", 1, -cert.phi_value));

    let replicas = scaled(100_000, s).max(2);
    let sm = check_supermartingale(&params, cert.c0, replicas, 50.0, X_GRID_POINTS, seed.wrapping_add(5))?;
    checks.push(LemmaCheck::new("one_jump_identity", 1, EXACT_TOL - sm.identity_error));
    checks.push(LemmaCheck::new("supermartingale_mc", replicas, 3.0 - sm.worst_increase_sigma));

    let esc = escape_probability_mc(&params, 2.001, 1000.0, replicas, seed.wrapping_add(6))?;
    checks.push(LemmaCheck::new(
        "escape_bound",
        replicas,
        esc.escaped.estimate + 3.0 * esc.escaped.std_error - esc.certificate.escape_bound,
    ));

    let drift = measure_log_drift(&params, 50.0, X_GRID_POINTS, replicas, seed.wrapping_add(7))?;
    let rel = (drift.slope - drift.expected_slope).abs() / drift.expected_slope;
    checks.push(LemmaCheck::new("log_drift", replicas, DRIFT_REL_TOL - rel));

    let bound = theorem_lower_bound(&params)?;
    checks.push(LemmaCheck::new("theorem_bound_positive", 1, bound.total));

    if params.mu_plus() <= 0.5 {
        let wit = EscalationWitness::initial(params.theta(), params.mu_plus())?;
        let ok = check_escalation_intervals(params.theta(), params.mu_plus(), wit.c0_profile, wit.epsilon, 10_001)?;
        checks.push(LemmaCheck::new("escalation_intervals", 10_001, if ok { 0.0 } else { -1.0 }));
    }

    Ok(VerifyReport {
        config: cfg.clone(),
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}

pub fn cmd_verify(cfg: &ExperimentConfig) -> Result<VerifyReport> {
    let out = cfg.prepare_out_dir()?;
    let report = run_verify(cfg)?;
    output::write_json(&out.join("verify.json"), &report)?;
    if !report.passed {
        let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        return Err(HarnessError::Property(format!("failed: {}", failed.join(", "))));
    }
    Ok(report)
}
