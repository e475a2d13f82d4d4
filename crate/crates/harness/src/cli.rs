//! Command-line surface.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};
use deffuant_core::Boundary;
use serde::Serialize;

use crate::analysis_cmds::{cmd_c0, cmd_forced_increase, cmd_meanfield, cmd_xprocess};
use crate::config::{ConfigOverrides, ExperimentConfig, Purpose};
use crate::error::{exit, HarnessError, Result};
use crate::output;
use crate::simulate::cmd_lattice;
use crate::verify::cmd_verify;

#[derive(Debug, Parser)]
#[command(name = "deffuant", version, about = "Attraction/repulsion Deffuant model experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub args: Args,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Lattice replicas with gap trackers; writes time series and a summary.
    Simulate,
    /// Like `simulate`, keeping every tracker trace and per-class report.
    Track,
    /// Deterministic K-interaction sequence on a six-site segment.
    ForcedIncrease,
    /// Escape probability, log drift and supermartingale check for X.
    Xprocess,
    /// Supermartingale certificate and escape bound.
    C0,
    /// Mean-field density evolution.
    Meanfield,
    /// Every lemma oracle; nonzero exit on any failure.
    Verify,
}

#[derive(Debug, Clone, Default, clap::Args)]
pub struct Args {
    /// Flat JSON config file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub theta: Option<f64>,
    #[arg(long, global = true)]
    pub mu_minus: Option<f64>,
    #[arg(long, global = true)]
    pub mu_plus: Option<f64>,
    #[arg(long, global = true)]
    pub sites: Option<usize>,
    #[arg(long, global = true)]
    pub t_max: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub replicas: Option<u64>,
    #[arg(long, global = true, value_parser = parse_boundary)]
    pub boundary: Option<Boundary>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Track every n-th edge instead of the size-based default.
    #[arg(long, global = true)]
    pub origin_stride: Option<usize>,
    /// Comma-separated divergence thresholds.
    #[arg(long, global = true, value_delimiter = ',')]
    pub thresholds: Option<Vec<f64>>,
    #[arg(long, global = true)]
    pub sample_interval: Option<f64>,
    #[arg(long, global = true)]
    pub history_stride: Option<u64>,
    /// Number of leading replicas that write a tracker trace (`simulate`).
    #[arg(long, global = true)]
    pub trace_replicas: Option<u64>,
    #[arg(long, global = true)]
    pub dump_events: bool,
    #[arg(long, global = true)]
    pub svg: bool,
    #[arg(long, global = true)]
    pub x0_over_d: Option<f64>,
    #[arg(long, global = true)]
    pub n_over_d: Option<f64>,
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true)]
    pub half_width: Option<f64>,
    #[arg(long, global = true)]
    pub da: Option<f64>,
    #[arg(long, global = true)]
    pub dt: Option<f64>,
    #[arg(long, global = true)]
    pub support_level: Option<f64>,
    /// Multiplies every sample count in `verify`.
    #[arg(long, global = true)]
    pub sample_scale: Option<f64>,
}

fn parse_boundary(s: &str) -> std::result::Result<Boundary, String> {
    s.parse().map_err(|e: deffuant_core::Error| e.to_string())
}

impl Args {
    pub fn overrides(&self) -> ConfigOverrides {
        ConfigOverrides {
            theta: self.theta,
            mu_minus: self.mu_minus,
            mu_plus: self.mu_plus,
            sites: self.sites,
            boundary: self.boundary,
            t_max: self.t_max,
            seed: self.seed,
            replicas: self.replicas,
            threads: self.threads,
            out: self.out.clone(),
            origin_stride: self.origin_stride,
            thresholds: self.thresholds.clone(),
            sample_interval: self.sample_interval,
            history_stride: self.history_stride,
            trace_replicas: self.trace_replicas,
            dump_events: self.dump_events.then_some(true),
            svg: self.svg.then_some(true),
            x0_over_d: self.x0_over_d,
            n_over_d: self.n_over_d,
            tol: self.tol,
            half_width: self.half_width,
            da: self.da,
            dt: self.dt,
            support_level: self.support_level,
            sample_scale: self.sample_scale,
        }
    }

    pub fn resolve(&self, command: Command) -> Result<ExperimentConfig> {
        let base = match &self.config {
            Some(path) => ConfigOverrides::from_file(path)?,
            None => ConfigOverrides::default(),
        };
        let purpose = match command {
            Command::Simulate | Command::Track => Purpose::Lattice,
            Command::Xprocess => Purpose::XProcess,
            Command::Meanfield => Purpose::MeanField,
            _ => Purpose::Other,
        };
        ExperimentConfig::resolve(base.overlay(self.overrides()), purpose)
    }
}

#[derive(Serialize)]
struct Timing<'a> {
    command: &'a str,
    wall_clock_seconds: f64,
}

fn dispatch(command: Command, cfg: &ExperimentConfig) -> Result<()> {
    match command {
        Command::Simulate | Command::Track => {
            let s = cmd_lattice(cfg, command == Command::Track)?;
            println!("{} replicas, {} events", s.replicas.len(), s.total_events);
            for t in &s.thresholds {
                let e = &t.exceedance;
                println!(
                    "  gap > {:e}: {}/{} replicas ({:.3}, 95% CI [{:.3}, {:.3}])",
                    t.threshold, e.successes, e.trials, e.estimate, e.wilson_low, e.wilson_high
                );
            }
        }
        Command::ForcedIncrease => {
            let r = cmd_forced_increase(cfg)?;
            println!(
                "K = {}: final gap {:.6} > 2D = {:.6}, tracker fixed: {}",
                r.k, r.final_gap, r.two_d, r.tracker_fixed
            );
        }
        Command::Xprocess => {
            let r = cmd_xprocess(cfg)?;
            let e = &r.escape.escaped;
            println!(
                "escape {:.4} +- {:.4} (bound {:.4}); drift {:.5} vs {:.5}; E[Y] worst rise {:.2} sigma",
                e.estimate,
                e.std_error,
                r.certificate.escape_bound,
                r.drift.slope,
                r.drift.expected_slope,
                r.supermartingale.worst_increase_sigma
            );
        }
        Command::C0 => {
            let r = cmd_c0(cfg)?;
            let c = &r.certificate;
            println!(
                "c* = {:.9}, c0 = {:.9}, phi(c0) = {:.3e}, escape bound = {:.6}",
                c.c_star, c.c0, c.phi_value, c.escape_bound
            );
        }
        Command::Meanfield => {
            let r = cmd_meanfield(cfg)?;
            println!(
                "support radius {:.4} at t = {} (target {:.4}); escalation intervals ok: {}",
                r.run.final_support_radius, cfg.t_max, r.support_target, r.escalation_intervals_ok
            );
        }
        Command::Verify => {
            let r = cmd_verify(cfg)?;
            for c in &r.checks {
                println!("{:<32} {:>12} samples  margin {:.3e}  PASS", c.name, c.samples, c.worst_margin);
            }
        }
    }
    Ok(())
}

fn command_name(command: Command) -> &'static str {
    match command {
        Command::Simulate => "simulate",
        Command::Track => "track",
        Command::ForcedIncrease => "forced-increase",
        Command::Xprocess => "xprocess",
        Command::C0 => "c0",
        Command::Meanfield => "meanfield",
        Command::Verify => "verify",
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let start = Instant::now();
    let result = cli.args.resolve(cli.command).and_then(|cfg| {
        let outcome = dispatch(cli.command, &cfg);
        // Timing lives outside the deterministic outputs.
        if cfg.out.is_dir() {
            let timing = Timing {
                command: command_name(cli.command),
                wall_clock_seconds: start.elapsed().as_secs_f64(),
            };
            output::write_json(&cfg.out.join("timing.json"), &timing)?;
        }
        outcome
    });
    match result {
        Ok(()) => exit::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let HarnessError::Model(deffuant_core::Error::NonFinite { time, .. }) = &e {
                eprintln!("aborted at t = {time}");
            }
            e.exit_code()
        }
    }
}
