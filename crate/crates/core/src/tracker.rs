//! Coalescing trackers that follow locally maximal gaps.
//!
//! A tracker sits on an edge. Whenever an interaction happens on its edge or
//! on one of the two adjacent edges, it jumps to whichever of the three edges
//! now carries the largest gap. Trackers landing on the same edge coalesce into
//! one class for good.

use std::io::{self, Write};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::events::Event;
use crate::lattice::OpinionLattice;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapSample {
    pub time: f64,
    pub position: usize,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrackerClass {
    pub id: usize,
    /// Edge this class's founding tracker started on.
    pub origin: usize,
    pub position: usize,
    /// Origins of every tracker merged into this class, founder first.
    pub members: Vec<usize>,
    pub initial_gap: f64,
    pub max_gap: f64,
    pub last_gap: f64,
    pub touches: u64,
    pub history: Vec<GapSample>,
    #[serde(skip)]
    merged_into: Option<usize>,
}

impl TrackerClass {
    pub fn is_alive(&self) -> bool {
        self.merged_into.is_none()
    }
}

/// One tracker class displaced (or confirmed in place) by an event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Relocation {
    /// Class id after any merge at the destination.
    pub class: usize,
    pub from: usize,
    pub to: usize,
}

/// Up to three relocations produced by a single event.
#[derive(Debug, Clone, Copy, Default)]
pub struct Relocations {
    items: [Option<Relocation>; 3],
}

impl Relocations {
    fn push(&mut self, r: Relocation) {
        let slot = self.items.iter_mut().find(|s| s.is_none()).expect("at most three movers");
        *slot = Some(r);
    }

    pub fn iter(&self) -> impl Iterator<Item = &Relocation> {
        self.items.iter().flatten()
    }

    pub fn is_empty(&self) -> bool {
        self.items[0].is_none()
    }
}

#[derive(Debug, Clone)]
pub struct TrackerState {
    classes: Vec<TrackerClass>,
    occupant: Vec<Option<usize>>,
    origin_class: Vec<Option<usize>>,
    history_stride: u64,
}

impl TrackerState {
    /// One singleton class per origin, each sitting on its origin edge.
    ///
    /// `history_stride` of `m` records a gap sample every `m`-th event touching
    /// a class; zero disables history.
    pub fn new(origins: &[usize], lattice: &OpinionLattice, history_stride: u64) -> Result<Self> {
        let mut occupant = vec![None; lattice.n_edges()];
        let mut origin_class = vec![None; lattice.n_edges()];
        let mut classes = Vec::with_capacity(origins.len());
        for (id, &edge) in origins.iter().enumerate() {
            lattice.check_edge(edge)?;
            if occupant[edge].is_some() {
                return Err(Error::DuplicateOrigin(edge));
            }
            occupant[edge] = Some(id);
            origin_class[edge] = Some(id);
            let gap = lattice.gap_unchecked(edge);
            let history = if history_stride > 0 {
                vec![GapSample { time: 0.0, position: edge, gap }]
            } else {
                Vec::new()
            };
            classes.push(TrackerClass {
                id,
                origin: edge,
                position: edge,
                members: vec![edge],
                initial_gap: gap,
                max_gap: gap,
                last_gap: gap,
                touches: 0,
                history,
                merged_into: None,
            });
        }
        Ok(Self {
            classes,
            occupant,
            origin_class,
            history_stride,
        })
    }

    pub fn classes(&self) -> impl Iterator<Item = &TrackerClass> {
        self.classes.iter().filter(|c| c.is_alive())
    }

    pub fn n_classes(&self) -> usize {
        self.classes().count()
    }

    pub fn class(&self, id: usize) -> Option<&TrackerClass> {
        self.classes.get(id)
    }

    /// Current class of the tracker started at `origin`.
    pub fn class_of_origin(&self, origin: usize) -> Option<usize> {
        let id = self.origin_class.get(origin).copied().flatten()?;
        Some(self.resolve(id))
    }

    pub fn position_of_origin(&self, origin: usize) -> Option<usize> {
        self.class_of_origin(origin).map(|id| self.classes[id].position)
    }

    /// Class currently sitting on `edge`.
    pub fn occupant(&self, edge: usize) -> Option<usize> {
        self.occupant.get(edge).copied().flatten()
    }

    /// Updates the trackers after the interaction `event` has been applied to
    /// `lattice`.
    pub fn on_event(&mut self, event: &Event, lattice: &OpinionLattice) -> Relocations {
        let mut movers = [None; 3];
        for (slot, edge) in movers.iter_mut().zip(lattice.window(event.edge)) {
            if let Some(id) = self.occupant[edge].take() {
                *slot = Some(id);
            }
        }

        let mut out = Relocations::default();
        for id in movers.into_iter().flatten() {
            let from = self.classes[id].position;
            let to = local_argmax(lattice, from);
            let survivor = match self.occupant[to] {
                Some(other) => self.merge(id, other),
                None => id,
            };
            self.occupant[to] = Some(survivor);
            self.classes[survivor].position = to;
            out.push(Relocation {
                class: survivor,
                from,
                to,
            });
        }

        // A later mover may have merged into an earlier one.
        for slot in out.items.iter_mut().flatten() {
            slot.class = self.resolve(slot.class);
        }

        let stride = self.history_stride;
        let mut updated = [usize::MAX; 3];
        for (i, r) in out.iter().enumerate() {
            if updated[..i].contains(&r.class) {
                continue;
            }
            updated[i] = r.class;
            let class = &mut self.classes[r.class];
            let gap = lattice.gap_unchecked(class.position);
            class.last_gap = gap;
            class.max_gap = class.max_gap.max(gap);
            class.touches += 1;
            if stride > 0 && class.touches.is_multiple_of(stride) {
                class.history.push(GapSample {
                    time: event.time,
                    position: class.position,
                    gap,
                });
            }
        }
        out
    }

    fn resolve(&self, mut id: usize) -> usize {
        while let Some(next) = self.classes[id].merged_into {
            id = next;
        }
        id
    }

    /// Merges classes `a` and `b`; the smaller id survives.
    fn merge(&mut self, a: usize, b: usize) -> usize {
        let (keep, gone) = if a < b { (a, b) } else { (b, a) };
        let absorbed = std::mem::take(&mut self.classes[gone].members);
        let max_gap = self.classes[gone].max_gap;
        self.classes[gone].merged_into = Some(keep);
        let survivor = &mut self.classes[keep];
        survivor.members.extend(absorbed);
        survivor.max_gap = survivor.max_gap.max(max_gap);
        keep
    }

    pub fn divergence_stats(&self, thresholds: &[f64]) -> DivergenceReport {
        let classes: Vec<ClassReport> = self
            .classes()
            .map(|c| ClassReport {
                class_id: c.id,
                n_members: c.members.len(),
                max_gap: c.max_gap,
                last_gap: c.last_gap,
                last_position: c.position,
                exceeded: thresholds.iter().map(|&t| c.max_gap > t).collect(),
            })
            .collect();
        let top = thresholds.iter().copied().reduce(f64::max);
        let n_classes_above_top = top.map(|t| classes.iter().filter(|c| c.max_gap > t).count());
        let max_gap = classes.iter().map(|c| c.max_gap).fold(0.0, f64::max);
        DivergenceReport {
            thresholds: thresholds.to_vec(),
            max_gap,
            n_classes_above_top,
            classes,
        }
    }

    /// Writes every recorded history sample as `t,class_id,position,gap`.
    ///
    /// Rows are grouped by the class that recorded them, time-ordered within
    /// each class.
    pub fn write_trace_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,class_id,position,gap")?;
        for c in &self.classes {
            for s in &c.history {
                writeln!(w, "{},{},{},{}", s.time, c.id, s.position, s.gap)?;
            }
        }
        Ok(())
    }
}

/// Edge of the largest gap among `edge - 1`, `edge`, `edge + 1`.
///
/// Ties go to `edge` itself, then to the smaller index.
pub fn local_argmax(lattice: &OpinionLattice, edge: usize) -> usize {
    let mut best = edge;
    let mut best_gap = lattice.gap_unchecked(edge);
    for cand in lattice.window(edge) {
        if cand == edge {
            continue;
        }
        let g = lattice.gap_unchecked(cand);
        if g > best_gap || (g == best_gap && best != edge && cand < best) {
            best = cand;
            best_gap = g;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassReport {
    pub class_id: usize,
    pub n_members: usize,
    pub max_gap: f64,
    pub last_gap: f64,
    pub last_position: usize,
    /// `max_gap > threshold` for each requested threshold.
    pub exceeded: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivergenceReport {
    pub thresholds: Vec<f64>,
    pub max_gap: f64,
    /// Classes whose gap exceeded the largest threshold; `None` without thresholds.
    pub n_classes_above_top: Option<usize>,
    pub classes: Vec<ClassReport>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Boundary;

    fn lattice(ops: &[f64]) -> OpinionLattice {
        OpinionLattice::from_opinions(ops.to_vec(), Boundary::Segment).unwrap()
    }

    #[test]
    fn init_singletons() {
        let lat = OpinionLattice::from_opinions(vec![0.0; 10], Boundary::Ring).unwrap();
        let origins: Vec<usize> = (0..10).collect();
        let st = TrackerState::new(&origins, &lat, 1).unwrap();
        assert_eq!(st.n_classes(), 10);
        for e in 0..10 {
            assert_eq!(st.position_of_origin(e), Some(e));
        }
        let one = TrackerState::new(&[4], &lat, 1).unwrap();
        assert_eq!(one.n_classes(), 1);
        assert_eq!(one.occupant(4), Some(0));
    }

    #[test]
    fn duplicate_and_invalid_origins_rejected() {
        let lat = OpinionLattice::from_opinions(vec![0.0; 10], Boundary::Ring).unwrap();
        assert_eq!(TrackerState::new(&[1, 1], &lat, 1).unwrap_err(), Error::DuplicateOrigin(1));
        assert!(TrackerState::new(&[10], &lat, 1).is_err());
    }

    #[test]
    fn event_out_of_window_ignored() {
        // gaps: 1, 5, 2, 9, 0, 0
        let lat = lattice(&[0.0, 1.0, -4.0, -2.0, 7.0, 7.0, 7.0]);
        let mut st = TrackerState::new(&[1], &lat, 1).unwrap();
        let r = st.on_event(&Event { time: 0.5, edge: 3 }, &lat);
        assert!(r.is_empty());
        assert_eq!(st.position_of_origin(1), Some(1));
    }

    #[test]
    fn stays_on_local_maximum() {
        // gaps at (0, 1, 2) = (1, 5, 2)
        let lat = lattice(&[0.0, 1.0, -4.0, -2.0, -2.0]);
        let mut st = TrackerState::new(&[1], &lat, 1).unwrap();
        let r = st.on_event(&Event { time: 0.5, edge: 2 }, &lat);
        let moved: Vec<_> = r.iter().copied().collect();
        assert_eq!(moved, vec![Relocation { class: 0, from: 1, to: 1 }]);
    }

    #[test]
    fn jumps_to_larger_neighbor() {
        // gaps at (0, 1, 2) = (1, 2, 5)
        let lat = lattice(&[0.0, 1.0, -1.0, 4.0, 4.0]);
        let mut st = TrackerState::new(&[1], &lat, 1).unwrap();
        st.on_event(&Event { time: 0.5, edge: 0 }, &lat);
        assert_eq!(st.position_of_origin(1), Some(2));
        assert_eq!(st.class(0).unwrap().max_gap, 5.0);
    }

    #[test]
    fn tie_break_prefers_current_then_smaller() {
        // gaps (2, 2, 2)
        let lat = lattice(&[0.0, 2.0, 0.0, 2.0, 2.0]);
        assert_eq!(local_argmax(&lat, 1), 1);
        // gaps (3, 1, 3): both neighbors tie above current
        let lat = lattice(&[0.0, 3.0, 2.0, 5.0, 5.0]);
        assert_eq!(local_argmax(&lat, 1), 0);
    }

    #[test]
    fn trackers_meeting_coalesce_and_stay_merged() {
        // gaps (1, 9, 1, 1)
        let lat = lattice(&[0.0, 1.0, 10.0, 11.0, 12.0]);
        let mut st = TrackerState::new(&[0, 2], &lat, 1).unwrap();
        st.on_event(&Event { time: 0.1, edge: 1 }, &lat);
        assert_eq!(st.n_classes(), 1);
        assert_eq!(st.class_of_origin(0), st.class_of_origin(2));
        assert_eq!(st.position_of_origin(0), Some(1));
        let survivor = st.classes().next().unwrap();
        assert_eq!(survivor.members, vec![0, 2]);

        // further events never split them
        let lat2 = lattice(&[0.0, 5.0, 6.0, 16.0, 17.0]);
        st.on_event(&Event { time: 0.2, edge: 1 }, &lat2);
        assert_eq!(st.n_classes(), 1);
        assert_eq!(st.position_of_origin(0), st.position_of_origin(2));
    }

    #[test]
    fn merge_with_stationary_occupant() {
        // tracker at 1 jumps to 2 where another tracker already sits; the
        // event at 0 is out of range for the tracker at 2.
        let lat = lattice(&[0.0, 0.5, 1.0, 9.0, 9.5]);
        let mut st = TrackerState::new(&[1, 2], &lat, 1).unwrap();
        let r = st.on_event(&Event { time: 0.3, edge: 0 }, &lat);
        assert_eq!(st.n_classes(), 1);
        assert_eq!(r.iter().next().unwrap().class, 0);
        assert_eq!(st.occupant(2), Some(0));
    }

    #[test]
    fn stats_without_events_use_initial_gaps() {
        let lat = lattice(&[0.0, 1.0, 3.0, 6.0]);
        let st = TrackerState::new(&[0, 1, 2], &lat, 1).unwrap();
        let rep = st.divergence_stats(&[1.5, 2.5]);
        let maxes: Vec<f64> = rep.classes.iter().map(|c| c.max_gap).collect();
        assert_eq!(maxes, vec![1.0, 2.0, 3.0]);
        assert_eq!(rep.classes[1].exceeded, vec![true, false]);
        assert_eq!(rep.n_classes_above_top, Some(1));

        let bare = st.divergence_stats(&[]);
        assert_eq!(bare.n_classes_above_top, None);
        assert!(bare.classes.iter().all(|c| c.exceeded.is_empty()));
    }

    #[test]
    fn trace_csv_has_header_and_rows() {
        let lat = lattice(&[0.0, 1.0, 3.0, 6.0]);
        let st = TrackerState::new(&[0], &lat, 1).unwrap();
        let mut buf = Vec::new();
        st.write_trace_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "t,class_id,position,gap\n0,0,0,1\n");
    }
}
