//! Sequential lattice simulation wired to the event stream and the trackers.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::events::{Event, EventStream};
use crate::lattice::OpinionLattice;
use crate::model::{interact, ModelParams};
use crate::rng::SimRng;
use crate::tracker::TrackerState;

/// Relative slack for the per-event exactness checks.
pub const EXACT_REL_TOL: f64 = 1e-12;
/// Relative drift allowed in the total opinion sum over a run.
pub const SUM_DRIFT_TOL: f64 = 1e-9;

/// Above this many edges the default tracker origins are thinned out.
pub const MAX_DEFAULT_ORIGINS: usize = 4096;

/// Every edge for small lattices, every `ceil(n / 4096)`-th edge otherwise.
pub fn default_origins(n_edges: usize) -> Vec<usize> {
    let stride = n_edges.div_ceil(MAX_DEFAULT_ORIGINS).max(1);
    (0..n_edges).step_by(stride).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunOptions {
    /// Spacing of time-series samples; `None` records no series.
    pub sample_interval: Option<f64>,
    /// Check the tracker domination bounds at every adjacent event.
    pub check_domination: bool,
    /// Check pair-sum conservation on every `n`-th event (0 disables).
    pub conservation_stride: u64,
    /// Keep every event in memory for later dumping.
    pub record_events: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            sample_interval: None,
            check_domination: true,
            conservation_stride: 1024,
            record_events: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesRow {
    pub t: f64,
    pub max_gap: f64,
    pub n_gaps_above_theta: usize,
    pub mean_abs_opinion: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct CheckCounts {
    /// Flanking events on a tracker whose gap exceeded `D`.
    pub domination_checks: u64,
    /// Events on a tracker's own edge with gap above `theta`.
    pub growth_checks: u64,
    pub conservation_checks: u64,
    pub max_sum_drift: f64,
}

#[derive(Debug, Clone)]
pub struct LatticeRun {
    params: ModelParams,
    lattice: OpinionLattice,
    stream: EventStream,
    trackers: Option<TrackerState>,
    options: RunOptions,
    pending: Option<Event>,
    time: f64,
    n_events: u64,
    initial_sum: f64,
    next_sample: f64,
    series: Vec<SeriesRow>,
    events: Vec<Event>,
    checks: CheckCounts,
}

impl LatticeRun {
    pub fn new(
        params: ModelParams,
        lattice: OpinionLattice,
        trackers: Option<TrackerState>,
        rng: SimRng,
        options: RunOptions,
    ) -> Result<Self> {
        if let Some(dt) = options.sample_interval {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "sample interval must be positive, got {dt}"
                )));
            }
        }
        let stream = EventStream::new(lattice.n_edges(), rng);
        let initial_sum = lattice.opinions().iter().sum();
        Ok(Self {
            params,
            lattice,
            stream,
            trackers,
            options,
            pending: None,
            time: 0.0,
            n_events: 0,
            initial_sum,
            next_sample: 0.0,
            series: Vec::new(),
            events: Vec::new(),
            checks: CheckCounts::default(),
        })
    }

    /// Uniform initial opinions with trackers on `origins`.
    pub fn with_trackers(
        params: ModelParams,
        lattice: OpinionLattice,
        origins: &[usize],
        history_stride: u64,
        rng: SimRng,
        options: RunOptions,
    ) -> Result<Self> {
        let trackers = TrackerState::new(origins, &lattice, history_stride)?;
        Self::new(params, lattice, Some(trackers), rng, options)
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn lattice(&self) -> &OpinionLattice {
        &self.lattice
    }

    pub fn trackers(&self) -> Option<&TrackerState> {
        self.trackers.as_ref()
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn n_events(&self) -> u64 {
        self.n_events
    }

    pub fn series(&self) -> &[SeriesRow] {
        &self.series
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn checks(&self) -> &CheckCounts {
        &self.checks
    }

    /// Processes every event with time `<= t_end`.
    pub fn run_until(&mut self, t_end: f64) -> Result<()> {
        loop {
            let ev = match self.pending.take() {
                Some(ev) => ev,
                None => self.stream.next_event(),
            };
            self.record_samples_before(ev.time.min(t_end));
            if ev.time > t_end {
                self.pending = Some(ev);
                break;
            }
            self.apply(ev)?;
        }
        self.time = t_end;
        self.record_samples_before(t_end);
        if self.options.conservation_stride > 0 {
            self.check_total_sum()?;
        }
        Ok(())
    }

    fn record_samples_before(&mut self, t: f64) {
        let Some(dt) = self.options.sample_interval else {
            return;
        };
        while self.next_sample <= t {
            let row = self.snapshot(self.next_sample);
            self.series.push(row);
            self.next_sample = (self.series.len() as f64) * dt;
        }
    }

    pub fn snapshot(&self, t: f64) -> SeriesRow {
        let theta = self.params.theta();
        let mut max_gap = 0.0f64;
        let mut above = 0;
        for g in self.lattice.gaps() {
            max_gap = max_gap.max(g);
            above += usize::from(g > theta);
        }
        let ops = self.lattice.opinions();
        SeriesRow {
            t,
            max_gap,
            n_gaps_above_theta: above,
            mean_abs_opinion: ops.iter().map(|x| x.abs()).sum::<f64>() / ops.len() as f64,
        }
    }

    fn apply(&mut self, ev: Event) -> Result<()> {
        let domination_d = if self.options.check_domination {
            self.params.d()
        } else {
            None
        };

        // Gaps of tracked edges in the event's window, before the update.
        let mut before = [None; 3];
        if let Some(tr) = &self.trackers {
            for (slot, edge) in before.iter_mut().zip(self.lattice.window(ev.edge)) {
                if tr.occupant(edge).is_some() {
                    *slot = Some((edge, self.lattice.gap_unchecked(edge)));
                }
            }
        }

        let (l, r) = self.lattice.endpoints(ev.edge);
        let a = self.lattice.opinion(l);
        let b = self.lattice.opinion(r);
        let out = interact(a, b, &self.params);
        if !(out.new_left.is_finite() && out.new_right.is_finite()) {
            return Err(Error::NonFinite {
                time: ev.time,
                what: format!("opinions on edge {} after interaction", ev.edge),
            });
        }
        self.n_events += 1;
        let stride = self.options.conservation_stride;
        if stride > 0 && self.n_events.is_multiple_of(stride) {
            let before_sum = a + b;
            let after_sum = out.new_left + out.new_right;
            if (after_sum - before_sum).abs() > EXACT_REL_TOL * (a.abs() + b.abs()) {
                return Err(Error::Conservation {
                    time: ev.time,
                    before: before_sum,
                    after: after_sum,
                });
            }
            self.checks.conservation_checks += 1;
        }
        self.lattice.set_pair(ev.edge, out.new_left, out.new_right);
        if self.options.record_events {
            self.events.push(ev);
        }

        let Some(tr) = self.trackers.as_mut() else {
            return Ok(());
        };
        tr.on_event(&ev, &self.lattice);

        if !self.options.check_domination {
            return Ok(());
        }
        for (edge, pre_gap) in before.into_iter().flatten() {
            if edge == ev.edge {
                if pre_gap > self.params.theta() {
                    let post = self.lattice.gap_unchecked(edge);
                    let expected = self.params.rho_plus() * pre_gap;
                    if (post - expected).abs() > EXACT_REL_TOL * expected {
                        return Err(Error::DominationViolated {
                            time: ev.time,
                            edge,
                            pre_gap,
                            post_max: post,
                        });
                    }
                    self.checks.growth_checks += 1;
                }
            } else if let Some(d) = domination_d {
                if pre_gap > d {
                    let post_max = self
                        .lattice
                        .window(edge)
                        .map(|e| self.lattice.gap_unchecked(e))
                        .fold(0.0, f64::max);
                    let floor = self.params.rho_minus() * pre_gap;
                    if post_max < floor * (1.0 - EXACT_REL_TOL) {
                        return Err(Error::DominationViolated {
                            time: ev.time,
                            edge,
                            pre_gap,
                            post_max,
                        });
                    }
                    self.checks.domination_checks += 1;
                }
            }
        }
        Ok(())
    }

    fn check_total_sum(&mut self) -> Result<()> {
        let ops = self.lattice.opinions();
        let sum: f64 = ops.iter().sum();
        let scale = ops.iter().map(|x| x.abs()).sum::<f64>().max(1.0);
        let drift = (sum - self.initial_sum).abs() / scale;
        self.checks.max_sum_drift = self.checks.max_sum_drift.max(drift);
        if drift > SUM_DRIFT_TOL {
            return Err(Error::Conservation {
                time: self.time,
                before: self.initial_sum,
                after: sum,
            });
        }
        Ok(())
    }
}
