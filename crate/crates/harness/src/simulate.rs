//! Lattice replicas with trackers: the `simulate` and `track` subcommands.

use std::path::{Path, PathBuf};

use deffuant_core::events::write_trace_csv as write_events_csv;
use deffuant_core::rng::replica_rng;
use deffuant_core::simulation::{CheckCounts, SeriesRow};
use deffuant_core::stats::Proportion;
use deffuant_core::tracker::DivergenceReport;
use deffuant_core::{Event, LatticeRun, OpinionLattice, RunOptions};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::output;
use crate::plot::{self, Series};

/// Everything one replica produces.
#[derive(Debug, Clone)]
pub struct ReplicaResult {
    pub replica: u64,
    pub n_events: u64,
    pub series: Vec<SeriesRow>,
    pub divergence: DivergenceReport,
    pub checks: CheckCounts,
    pub final_gaps: Vec<f64>,
    /// Tracker trace CSV, kept only for replicas that write one.
    pub trace: Option<Vec<u8>>,
    pub events: Vec<Event>,
}

impl ReplicaResult {
    pub fn exceeded(&self) -> Vec<bool> {
        self.divergence
            .thresholds
            .iter()
            .map(|&t| self.divergence.max_gap > t)
            .collect()
    }
}

/// Runs one replica to `cfg.t_max`.
pub fn run_replica(cfg: &ExperimentConfig, replica: u64, keep_trace: bool) -> Result<ReplicaResult> {
    let params = cfg.params()?;
    let mut rng = replica_rng(cfg.seed, replica);
    let lattice = OpinionLattice::initial_config(cfg.sites, cfg.boundary, &mut rng)?;
    let origins = cfg.origins(lattice.n_edges());
    let options = RunOptions {
        sample_interval: Some(cfg.sample_interval),
        check_domination: true,
        conservation_stride: RunOptions::default().conservation_stride,
        record_events: cfg.dump_events,
    };
    let mut run = LatticeRun::with_trackers(params, lattice, &origins, cfg.history_stride, rng, options)?;
    run.run_until(cfg.t_max)?;
    let trackers = run.trackers().expect("run was built with trackers");
    let trace = if keep_trace {
        let mut buf = Vec::new();
        trackers.write_trace_csv(&mut buf).expect("writing to memory");
        Some(buf)
    } else {
        None
    };
    Ok(ReplicaResult {
        replica,
        n_events: run.n_events(),
        series: run.series().to_vec(),
        divergence: trackers.divergence_stats(&cfg.thresholds),
        checks: *run.checks(),
        final_gaps: run.lattice().gaps().collect(),
        trace,
        events: run.events().to_vec(),
    })
}

/// Runs all replicas on `cfg.threads` workers; results come back in replica order.
pub fn run_replicas(cfg: &ExperimentConfig, keep_trace: impl Fn(u64) -> bool + Sync) -> Result<Vec<ReplicaResult>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| crate::error::HarnessError::Config(format!("thread pool: {e}")))?;
    let results: Vec<Result<ReplicaResult>> = pool.install(|| {
        (0..cfg.replicas)
            .into_par_iter()
            .map(|r| run_replica(cfg, r, keep_trace(r)))
            .collect()
    });
    results.into_iter().collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdSummary {
    pub threshold: f64,
    /// Replicas in which some tracked gap exceeded the threshold.
    pub exceedance: Proportion,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReplicaSummary {
    pub replica: u64,
    pub n_events: u64,
    pub max_tracked_gap: f64,
    pub n_classes: usize,
    pub exceeded: Vec<bool>,
    pub n_classes_above_top: Option<usize>,
    pub final_max_gap: f64,
    pub final_fraction_gaps_above_theta: f64,
    pub checks: CheckCounts,
}

#[derive(Debug, Clone, Serialize)]
pub struct DerivedParams {
    pub rho_minus: f64,
    pub rho_plus: f64,
    pub d: Option<f64>,
    pub k: Option<u32>,
}

impl DerivedParams {
    pub fn of(cfg: &ExperimentConfig) -> Result<Self> {
        let p = cfg.params()?;
        Ok(Self {
            rho_minus: p.rho_minus(),
            rho_plus: p.rho_plus(),
            d: p.d(),
            k: p.k(),
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub command: &'static str,
    pub config: ExperimentConfig,
    pub derived: DerivedParams,
    pub thresholds: Vec<ThresholdSummary>,
    pub total_events: u64,
    pub total_domination_checks: u64,
    pub total_growth_checks: u64,
    pub max_sum_drift: f64,
    pub replicas: Vec<ReplicaSummary>,
}

pub fn summarize(command: &'static str, cfg: &ExperimentConfig, results: &[ReplicaResult]) -> Result<RunSummary> {
    let n = results.len() as u64;
    let thresholds = cfg
        .thresholds
        .iter()
        .enumerate()
        .map(|(i, &threshold)| {
            let hits = results.iter().filter(|r| r.exceeded()[i]).count() as u64;
            ThresholdSummary {
                threshold,
                exceedance: Proportion::new(hits, n),
            }
        })
        .collect();
    let replicas = results
        .iter()
        .map(|r| {
            let n_gaps = r.final_gaps.len().max(1) as f64;
            ReplicaSummary {
                replica: r.replica,
                n_events: r.n_events,
                max_tracked_gap: r.divergence.max_gap,
                n_classes: r.divergence.classes.len(),
                exceeded: r.exceeded(),
                n_classes_above_top: r.divergence.n_classes_above_top,
                final_max_gap: r.final_gaps.iter().copied().fold(0.0, f64::max),
                final_fraction_gaps_above_theta: r.final_gaps.iter().filter(|&&g| g > cfg.theta).count() as f64
                    / n_gaps,
                checks: r.checks,
            }
        })
        .collect();
    Ok(RunSummary {
        command,
        config: cfg.clone(),
        derived: DerivedParams::of(cfg)?,
        thresholds,
        total_events: results.iter().map(|r| r.n_events).sum(),
        total_domination_checks: results.iter().map(|r| r.checks.domination_checks).sum(),
        total_growth_checks: results.iter().map(|r| r.checks.growth_checks).sum(),
        max_sum_drift: results.iter().map(|r| r.checks.max_sum_drift).fold(0.0, f64::max),
        replicas,
    })
}

pub fn replica_dir(out: &Path, replica: u64) -> PathBuf {
    out.join(format!("replica_{replica:04}"))
}

fn write_replica_files(cfg: &ExperimentConfig, r: &ReplicaResult, with_classes: bool) -> Result<()> {
    let dir = replica_dir(&cfg.out, r.replica);
    output::create_dir(&dir)?;
    output::write_with(&dir.join("timeseries.csv"), |w| {
        use std::io::Write;
        writeln!(w, "t,max_gap,n_gaps_above_theta,mean_abs_opinion")?;
        for row in &r.series {
            writeln!(w, "{},{},{},{}", row.t, row.max_gap, row.n_gaps_above_theta, row.mean_abs_opinion)?;
        }
        Ok(())
    })?;
    if let Some(trace) = &r.trace {
        output::write_with(&dir.join("tracker_trace.csv"), |w| {
            use std::io::Write;
            w.write_all(trace)
        })?;
    }
    if cfg.dump_events {
        output::write_with(&dir.join("events.csv"), |w| write_events_csv(w, &r.events))?;
    }
    if with_classes {
        output::write_json(&dir.join("divergence.json"), &r.divergence)?;
    }
    if cfg.svg {
        let points = r.series.iter().map(|row| (row.t, row.max_gap)).collect();
        plot::line_plot(
            &dir.join("max_gap.svg"),
            &format!("replica {}", r.replica),
            "t",
            "max gap",
            &[Series { label: "max gap", points }],
            true,
        )?;
    }
    Ok(())
}

/// `simulate`: many replicas, tracker traces for the first `trace_replicas`.
/// `track`: every replica keeps its trace and per-class divergence report.
pub fn cmd_lattice(cfg: &ExperimentConfig, track: bool) -> Result<RunSummary> {
    cfg.prepare_out_dir()?;
    let trace_limit = if track { u64::MAX } else { cfg.trace_replicas };
    let results = run_replicas(cfg, |r| r < trace_limit)?;
    for r in &results {
        write_replica_files(cfg, r, track)?;
    }
    let summary = summarize(if track { "track" } else { "simulate" }, cfg, &results)?;
    output::write_json(&cfg.out.join("summary.json"), &summary)?;
    Ok(summary)
}
