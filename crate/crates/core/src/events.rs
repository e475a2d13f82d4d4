//! Continuous-time event generation for rate-one edge clocks.
//!
//! Every edge carries an independent rate-one Poisson clock. The superposition
//! is a Poisson process of rate `n_edges` whose marks are uniform over edges,
//! which is what [`EventStream`] samples: one exponential holding time and one
//! uniform edge per event.

use std::io::{self, Write};

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::Serialize;

use crate::rng::SimRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Event {
    pub time: f64,
    pub edge: usize,
}

#[derive(Debug, Clone)]
pub struct EventStream {
    current_time: f64,
    n_edges: usize,
    holding: Exp<f64>,
    rng: SimRng,
}

impl EventStream {
    /// # Panics
    /// If `n_edges` is zero.
    pub fn new(n_edges: usize, rng: SimRng) -> Self {
        assert!(n_edges > 0, "event stream needs at least one edge");
        Self {
            current_time: 0.0,
            n_edges,
            holding: Exp::new(n_edges as f64).expect("positive rate"),
            rng,
        }
    }

    pub fn current_time(&self) -> f64 {
        self.current_time
    }

    pub fn total_rate(&self) -> f64 {
        self.n_edges as f64
    }

    pub fn n_edges(&self) -> usize {
        self.n_edges
    }

    pub fn next_event(&mut self) -> Event {
        let time = loop {
            let t = self.current_time + self.holding.sample(&mut self.rng);
            if t > self.current_time {
                break t;
            }
        };
        self.current_time = time;
        let edge = self.rng.gen_range(0..self.n_edges);
        Event { time, edge }
    }

    /// All events with time `<= t_end`, advancing the stream past `t_end`.
    ///
    /// The first event beyond `t_end` is drawn and discarded; by memorylessness
    /// the stream can simply continue from there.
    pub fn events_until(&mut self, t_end: f64) -> Vec<Event> {
        let mut out = Vec::new();
        loop {
            let ev = self.next_event();
            if ev.time > t_end {
                return out;
            }
            out.push(ev);
        }
    }
}

/// Number of events at `edge` with `start <= time < end`.
pub fn count_interactions(trace: &[Event], edge: usize, start: f64, end: f64) -> usize {
    trace
        .iter()
        .filter(|ev| ev.edge == edge && ev.time >= start && ev.time < end)
        .count()
}

/// Writes `time,edge` rows.
pub fn write_trace_csv<W: Write>(mut w: W, trace: &[Event]) -> io::Result<()> {
    writeln!(w, "time,edge")?;
    for ev in trace {
        writeln!(w, "{},{}", ev.time, ev.edge)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::replica_rng;
    use crate::stats::RunningStats;

    #[test]
    fn empty_trace_counts_zero() {
        assert_eq!(count_interactions(&[], 3, 0.0, 1.0), 0);
    }

    #[test]
    fn counts_respect_window_and_edge() {
        let trace = [
            Event { time: 0.1, edge: 1 },
            Event { time: 0.5, edge: 2 },
            Event { time: 0.9, edge: 1 },
            Event { time: 1.0, edge: 1 },
        ];
        assert_eq!(count_interactions(&trace, 1, 0.0, 1.0), 2);
        assert_eq!(count_interactions(&trace, 1, 0.0, 1.5), 3);
        assert_eq!(count_interactions(&trace, 2, 0.6, 1.0), 0);
    }

    #[test]
    fn same_seed_same_events() {
        let mut a = EventStream::new(1000, replica_rng(3, 0));
        let mut b = EventStream::new(1000, replica_rng(3, 0));
        for _ in 0..10_000 {
            assert_eq!(a.next_event(), b.next_event());
        }
    }

    #[test]
    fn times_strictly_increase() {
        let mut s = EventStream::new(7, replica_rng(9, 1));
        let mut last = 0.0;
        for _ in 0..100_000 {
            let ev = s.next_event();
            assert!(ev.time > last);
            assert!(ev.edge < 7);
            last = ev.time;
        }
    }

    #[test]
    fn mean_inter_arrival() {
        let n = 1000;
        let mut s = EventStream::new(n, replica_rng(21, 0));
        let mut stats = RunningStats::default();
        let mut last = 0.0;
        for _ in 0..1_000_000 {
            let ev = s.next_event();
            stats.push(ev.time - last);
            last = ev.time;
        }
        let expected = 1.0 / n as f64;
        let tol = 3.0 * expected / 1e3;
        assert!((stats.mean() - expected).abs() < tol, "mean {}", stats.mean());
    }

    #[test]
    fn trace_csv_format() {
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, &[Event { time: 0.25, edge: 4 }]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "time,edge\n0.25,4\n");
    }
}
