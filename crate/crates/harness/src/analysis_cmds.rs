//! The `forced-increase`, `xprocess`, `c0` and `meanfield` subcommands.

use deffuant_core::analysis::{
    check_supermartingale, escape_probability_mc, find_c0, forced_increase, measure_log_drift,
    theorem_lower_bound, Certificate, DriftEstimate, EscapeEstimate, ForcedIncreaseReport,
    SupermartingaleReport, TheoremBound,
};
use deffuant_core::meanfield::{check_escalation_intervals, run_meanfield, EscalationWitness, MeanfieldConfig, MeanfieldRun};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::output;
use crate::plot::{self, Series};

/// Relative tolerance on the measured drift of `ln X`.
pub const DRIFT_REL_TOL: f64 = 0.02;
/// Grid points for the drift and supermartingale Monte Carlo.
pub const X_GRID_POINTS: usize = 50;

pub fn cmd_forced_increase(cfg: &ExperimentConfig) -> Result<ForcedIncreaseReport> {
    let out = cfg.prepare_out_dir()?;
    let params = cfg.params()?;
    if params.mu_plus() == 0.0 {
        return Err(HarnessError::Config("forced-increase needs mu_plus > 0".into()));
    }
    let report = forced_increase(&params, None)?;
    output::write_json(&out.join("forced_increase.json"), &report)?;
    if !report.passed {
        return Err(HarnessError::Property(format!(
            "forced sequence reached gap {} (2D = {}), tracker fixed: {}",
            report.final_gap, report.two_d, report.tracker_fixed
        )));
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct XProcessReport {
    pub config: ExperimentConfig,
    pub certificate: Certificate,
    pub escape: EscapeEstimate,
    pub drift: DriftEstimate,
    pub drift_relative_error: f64,
    pub drift_ok: bool,
    pub supermartingale: SupermartingaleReport,
    pub passed: bool,
}

pub fn cmd_xprocess(cfg: &ExperimentConfig) -> Result<XProcessReport> {
    let out = cfg.prepare_out_dir()?;
    let params = cfg.params()?;
    if params.mu_plus() == 0.0 {
        return Err(HarnessError::Config("xprocess needs mu_plus > 0".into()));
    }
    let certificate = find_c0(&params, cfg.tol)?;
    let escape = escape_probability_mc(&params, cfg.x0_over_d, cfg.n_over_d, cfg.replicas, cfg.seed)?;
    let drift = measure_log_drift(&params, cfg.t_max, X_GRID_POINTS, cfg.replicas, cfg.seed.wrapping_add(1))?;
    let drift_relative_error = (drift.slope - drift.expected_slope).abs() / drift.expected_slope.abs();
    let drift_ok = drift_relative_error <= DRIFT_REL_TOL;
    let supermartingale = check_supermartingale(
        &params,
        certificate.c0,
        cfg.replicas.max(2),
        cfg.t_max,
        X_GRID_POINTS,
        cfg.seed.wrapping_add(2),
    )?;
    let passed = escape.consistent_with_bound && drift_ok && supermartingale.non_increasing;
    let report = XProcessReport {
        config: cfg.clone(),
        certificate,
        escape,
        drift_relative_error,
        drift_ok,
        drift,
        supermartingale,
        passed,
    };
    output::write_json(&out.join("xprocess.json"), &report)?;
    if cfg.svg {
        let d = &report.drift;
        plot::line_plot(
            &out.join("log_drift.svg"),
            "E[ln X_t - ln X_0]",
            "t",
            "mean log increment",
            &[
                Series { label: "measured", points: d.times.iter().copied().zip(d.mean_log_increment.iter().copied()).collect() },
                Series { label: "expected", points: d.times.iter().map(|&t| (t, t * d.expected_slope)).collect() },
            ],
            false,
        )?;
    }
    if !passed {
        return Err(HarnessError::Property(format!(
            "xprocess checks failed: escape consistent {}, drift error {:.4}, supermartingale {}",
            report.escape.consistent_with_bound, report.drift_relative_error, report.supermartingale.non_increasing
        )));
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct C0Report {
    pub mu_plus: f64,
    pub certificate: Certificate,
    /// `ln(rho_minus^2 rho_plus)`, positive for every `mu_plus > 0`.
    pub log_drift: f64,
    pub theorem_bound: Option<TheoremBound>,
}

pub fn cmd_c0(cfg: &ExperimentConfig) -> Result<C0Report> {
    let out = cfg.prepare_out_dir()?;
    let params = cfg.params()?;
    if params.mu_plus() == 0.0 {
        return Err(HarnessError::Config("c0 needs mu_plus > 0".into()));
    }
    let certificate = find_c0(&params, cfg.tol)?;
    let report = C0Report {
        mu_plus: params.mu_plus(),
        certificate,
        log_drift: deffuant_core::analysis::log_drift(&params),
        theorem_bound: theorem_lower_bound(&params).ok(),
    };
    output::write_json(&out.join("c0.json"), &report)?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct MeanfieldReport {
    pub run: MeanfieldRun,
    pub witness: EscalationWitness,
    pub escalation_intervals_ok: bool,
    /// Discretized repulsion integral at `c_plus` under the witness profile.
    pub repulsion_at_c_plus: f64,
    pub support_target: f64,
}

pub fn cmd_meanfield(cfg: &ExperimentConfig) -> Result<MeanfieldReport> {
    let out = cfg.prepare_out_dir()?;
    let mf = MeanfieldConfig {
        theta: cfg.theta,
        mu_plus: cfg.mu_plus,
        half_width: cfg.half_width,
        da: cfg.da,
        dt: cfg.dt,
        t_max: cfg.t_max,
        sample_interval: cfg.sample_interval,
        support_level: cfg.support_level,
    };
    let witness = EscalationWitness::initial(cfg.theta, cfg.mu_plus)?;
    let escalation_intervals_ok = check_escalation_intervals(cfg.theta, cfg.mu_plus, witness.c0_profile, witness.epsilon, 10_001)?;
    let repulsion_at_c_plus = witness.profile(cfg.half_width, cfg.da)?.repulsion_integral_at(witness.c_plus);
    let run = run_meanfield(&mf)?;
    output::write_with(&out.join("meanfield.csv"), |w| run.write_csv(w))?;
    output::write_with(&out.join("profile_final.csv"), |w| run.final_grid.write_profile_csv(w))?;
    if cfg.svg {
        let g = &run.final_grid;
        let profile = (0..g.len()).map(|i| (g.a(i), g.values()[i])).collect();
        plot::line_plot(&out.join("profile_final.svg"), &format!("density at t = {}", g.time()), "a", "u", &[Series { label: "u", points: profile }], false)?;
        let radius = run.rows.iter().map(|r| (r.t, r.support_radius)).collect();
        plot::line_plot(&out.join("support_radius.svg"), "support radius", "t", "radius", &[Series { label: "radius", points: radius }], false)?;
    }
    let report = MeanfieldReport {
        support_target: 1.0 + cfg.theta * cfg.mu_plus,
        run,
        witness,
        escalation_intervals_ok,
        repulsion_at_c_plus,
    };
    output::write_json(&out.join("meanfield.json"), &report)?;
    if !escalation_intervals_ok {
        return Err(HarnessError::Property("escalation intervals check failed".into()));
    }
    Ok(report)
}
