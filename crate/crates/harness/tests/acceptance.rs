//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::time::Instant;

use deffuant_core::analysis::lemmas::{initial_gap_event_mc, sample_control_gap_instance};
use deffuant_core::analysis::{
    align_transform, check_control_gap, check_supermartingale, escape_probability_mc, find_c0,
    forced_increase, lemma_initial_gap_bound, measure_log_drift, ControlGapCase,
};
use deffuant_core::meanfield::{check_escalation_intervals, run_meanfield, EscalationWitness, MeanfieldConfig};
use deffuant_core::rng::replica_rng;
use deffuant_core::{interact, Boundary, Branch, LatticeRun, ModelParams, OpinionLattice, RunOptions};
use deffuant_harness::simulate::run_replicas;
use deffuant_harness::{ConfigOverrides, ExperimentConfig, Purpose};
use rand::Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn canonical() -> ModelParams {
    ModelParams::new(1.0, 0.5, 0.25).unwrap()
}

fn interaction_exactness() -> Outcome {
    let mut rng = replica_rng(101, 0);
    let n = 1_000_000;
    let (mut worst_sum, mut worst_gap) = (0.0f64, 0.0f64);
    for _ in 0..n {
        let theta = rng.gen_range(0.01..2.0);
        let mu_minus = rng.gen_range(1e-6..=0.5);
        let mu_plus = rng.gen_range(0.0..=0.5);
        let p = ModelParams::new(theta, mu_minus, mu_plus).unwrap();
        let a: f64 = rng.gen_range(-5.0..5.0);
        let b: f64 = rng.gen_range(-5.0..5.0);
        let out = interact(a, b, &p);
        let scale = a.abs() + b.abs();
        let mult = match out.branch {
            Branch::Attraction => 1.0 - 2.0 * mu_minus,
            Branch::Repulsion => p.rho_plus(),
        };
        worst_sum = worst_sum.max(((out.new_left + out.new_right) - (a + b)).abs() / scale);
        worst_gap = worst_gap.max(((out.new_left - out.new_right).abs() - mult * (a - b).abs()).abs() / scale);
    }
    outcome(
        worst_sum <= 1e-12 && worst_gap <= 1e-12,
        format!("{n} pairs, max rel sum error {worst_sum:.2e}, max rel gap error {worst_gap:.2e}"),
    )
}

fn initial_gap() -> Outcome {
    let bound = lemma_initial_gap_bound(1.0);
    let p = initial_gap_event_mc(1.0, 10_000_000, 202);
    outcome(
        p.estimate >= bound - 3.0 * p.std_error,
        format!("P = {:.6} +- {:.6} over {} samples, bound {bound}", p.estimate, p.std_error, p.trials),
    )
}

fn align() -> Outcome {
    let n = 500;
    let axis: Vec<f64> = (0..n).map(|i| 10f64.powf(-3.0 + 6.0 * i as f64 / (n - 1) as f64)).collect();
    let (mut worst, mut worst_locus, mut count) = (f64::INFINITY, 0.0f64, 0u64);
    for mu in [0.05, 0.1, 0.25, 0.5] {
        let rho_minus = (1.0 + 2.0 * mu) / (1.0 + 3.0 * mu);
        for (i, &lower) in axis.iter().enumerate() {
            let c = (i % 7) as f64 - 3.0;
            let b = c + lower;
            for &upper in &axis {
                worst = worst.min(align_transform(b + upper, b, c, mu).unwrap().ratio - rho_minus);
                count += 1;
            }
            let r = align_transform(b + (1.0 + 3.0 * mu) * lower, b, c, mu).unwrap().ratio;
            worst_locus = worst_locus.max((r - rho_minus).abs());
        }
    }
    outcome(
        worst >= -1e-12 && worst_locus <= 1e-9,
        format!("{count} grid points, min(ratio - rho_minus) = {worst:.3e}, locus deviation {worst_locus:.2e}"),
    )
}

fn control_gap() -> Outcome {
    let params = canonical();
    let per_case = 100_000;
    let mut failures = 0u64;
    let mut min_ratio = f64::INFINITY;
    for (i, case) in ControlGapCase::ALL.into_iter().enumerate() {
        let mut rng = replica_rng(404, i as u64);
        for _ in 0..per_case {
            let (ops, side) = sample_control_gap_instance(case, &params, &mut rng).unwrap();
            let out = check_control_gap(ops, side, &params).unwrap();
            failures += u64::from(!out.holds || out.case != case);
            min_ratio = min_ratio.min(out.ratio);
        }
    }
    outcome(
        failures == 0,
        format!("4 x {per_case} instances, {failures} failures, min ratio {min_ratio:.15} (rho_minus {:.15})", params.rho_minus()),
    )
}

fn increase_gap() -> Outcome {
    let r = forced_increase(&canonical(), None).unwrap();
    outcome(
        r.k == 5 && r.final_gap > 7.0 && r.tracker_fixed && r.initial_event_holds,
        format!("K = {}, final gap {:.6} > 2D = {}, theta rho_plus^K = {:.6}, tracker fixed {}", r.k, r.final_gap, r.two_d, r.theta_rho_plus_k, r.tracker_fixed),
    )
}

fn supermartingale() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (i, mu) in [0.01, 0.1, 0.25, 0.5].into_iter().enumerate() {
        let p = ModelParams::new(1.0, 0.5, mu).unwrap();
        let cert = find_c0(&p, 1e-9).unwrap();
        let rep = check_supermartingale(&p, cert.c0, 100_000, 50.0, 10, 606 + i as u64).unwrap();
        ok &= cert.phi_value < 0.0 && rep.identity_error <= 1e-12 && rep.non_increasing;
        parts.push(format!(
            "mu+={mu}: phi(c0)={:.2e} id.err={:.1e} worst rise {:.2}sd",
            cert.phi_value, rep.identity_error, rep.worst_increase_sigma
        ));
    }
    outcome(ok, parts.join("; "))
}

fn optional_stopping() -> Outcome {
    let e = escape_probability_mc(&canonical(), 2.001, 1000.0, 100_000, 707).unwrap();
    let p = e.escaped;
    outcome(
        p.estimate >= e.certificate.escape_bound - 3.0 * p.std_error,
        format!("escape {:.4} +- {:.4}, bound {:.6}", p.estimate, p.std_error, e.certificate.escape_bound),
    )
}

fn drift() -> Outcome {
    let d = measure_log_drift(&canonical(), 50.0, 50, 100_000, 808).unwrap();
    let rel = (d.slope - d.expected_slope).abs() / d.expected_slope;
    outcome(rel <= 0.02, format!("slope {:.6} vs {:.6} (rel err {:.4})", d.slope, d.expected_slope, rel))
}

fn lattice_divergence() -> Outcome {
    let o = ConfigOverrides {
        sites: Some(1000),
        t_max: Some(200.0),
        replicas: Some(100),
        seed: Some(909),
        thresholds: Some(vec![1e4]),
        trace_replicas: Some(0),
        ..Default::default()
    };
    let cfg = ExperimentConfig::resolve(o, Purpose::Lattice).unwrap();
    match run_replicas(&cfg, |_| false) {
        Ok(results) => {
            let hits = results.iter().filter(|r| r.exceeded()[0]).count();
            let checks: u64 = results.iter().map(|r| r.checks.domination_checks).sum();
            outcome(
                hits > 0,
                format!("{hits}/100 seeds with a tracked gap > 1e4, {checks} live domination checks, none fired"),
            )
        }
        Err(e) => outcome(false, format!("run aborted: {e}")),
    }
}

fn fraction_above(run: &LatticeRun, level: f64) -> f64 {
    let gaps: Vec<f64> = run.lattice().gaps().collect();
    gaps.iter().filter(|&&g| g > level).count() as f64 / gaps.len() as f64
}

fn classic_run(theta: f64, seed: u64) -> LatticeRun {
    let params = ModelParams::new(theta, 0.5, 0.0).unwrap();
    let mut rng = replica_rng(seed, 0);
    let lattice = OpinionLattice::initial_config(10_000, Boundary::Ring, &mut rng).unwrap();
    LatticeRun::new(params, lattice, None, rng, RunOptions::default()).unwrap()
}

fn classic_limit() -> Outcome {
    let mut consensus = classic_run(1.5, 1010);
    consensus.run_until(1000.0).unwrap();
    let small = fraction_above(&consensus, 0.01);

    let mut discord = classic_run(0.5, 1011);
    discord.run_until(500.0).unwrap();
    let mid = fraction_above(&discord, 0.5);
    discord.run_until(1000.0).unwrap();
    let end = fraction_above(&discord, 0.5);
    let change = (end - mid).abs() / mid;
    outcome(
        small < 0.05 && end > 0.01 && change <= 0.1,
        format!("theta=1.5: frac(gap>0.01) = {small:.4} at t=1000; theta=0.5: frac(gap>theta) {mid:.4} -> {end:.4} (t=500 -> 1000, rel change {change:.3})"),
    )
}

fn meanfield_escalation() -> Outcome {
    let w = EscalationWitness::new(1.0, 0.25, 0.5, 0.25).unwrap();
    let intervals_ok = check_escalation_intervals(1.0, 0.25, 0.5, 0.25, 10_001).unwrap()
        && (w.c_plus - 1.125).abs() < 1e-12
        && (w.j_eps.0 + 0.425).abs() < 1e-12
        && (w.j_eps.1 + 0.325).abs() < 1e-12
        && (w.rate_bound - 0.00625).abs() < 1e-15;
    let cfg = MeanfieldConfig::canonical();
    let rep = w.profile(cfg.half_width, cfg.da).unwrap().repulsion_integral_at(w.c_plus);
    let quad_ok = rep >= w.rate_bound - 0.1 * cfg.da;
    let run = run_meanfield(&cfg).unwrap();
    let target = 1.0 + cfg.theta * cfg.mu_plus;
    outcome(
        intervals_ok && quad_ok && run.final_support_radius > target,
        format!(
            "intervals ok {intervals_ok}; repulsion at c+ = {rep:.5} >= {:.5} - 0.1 da; support radius {:.3} > {target} at t = {}",
            w.rate_bound, run.final_support_radius, cfg.t_max
        ),
    )
}

fn main() {
    type Criterion = (u32, &'static str, f64, fn() -> Outcome);
    let criteria: [Criterion; 11] = [
        (1, "interaction exactness", 1.0, interaction_exactness),
        (2, "initial-gap probability", 10.0, initial_gap),
        (3, "align ratio", 5.0, align),
        (4, "control gap", 5.0, control_gap),
        (5, "forced gap increase", 1.0, increase_gap),
        (6, "supermartingale certificate", 30.0, supermartingale),
        (7, "optional-stopping escape bound", 60.0, optional_stopping),
        (8, "log drift", 60.0, drift),
        (9, "lattice divergence", 600.0, lattice_divergence),
        (10, "classic limit", 600.0, classic_limit),
        (11, "mean-field escalation", 60.0, meanfield_escalation),
    ];
    let mut failed = 0;
    for (id, name, budget, f) in criteria {
        let start = Instant::now();
        let o = f();
        let secs = start.elapsed().as_secs_f64();
        let pass = o.passed && secs < budget;
        failed += usize::from(!pass);
        println!(
            "criterion {id:>2} {name:<31} {} ({secs:.2}s / {budget}s) {}",
            if pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!("{} of 11 criteria passed", 11 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
