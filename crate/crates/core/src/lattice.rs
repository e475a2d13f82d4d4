//! Opinion configurations on a finite ring or segment.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    /// Periodic: edge `i` joins sites `i` and `(i + 1) mod N`.
    #[default]
    Ring,
    /// Open: edge `i` joins sites `i` and `i + 1` for `i < N - 1`.
    Segment,
}

impl std::str::FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ring" => Ok(Boundary::Ring),
            "segment" => Ok(Boundary::Segment),
            other => Err(Error::InvalidParameter(format!(
                "unknown boundary {other:?} (expected ring or segment)"
            ))),
        }
    }
}

impl std::fmt::Display for Boundary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Boundary::Ring => "ring",
            Boundary::Segment => "segment",
        })
    }
}

pub const MIN_SITES: usize = 4;

/// Opinions indexed by site, with edges identified by their left endpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct OpinionLattice {
    opinions: Vec<f64>,
    boundary: Boundary,
}

impl OpinionLattice {
    pub fn from_opinions(opinions: Vec<f64>, boundary: Boundary) -> Result<Self> {
        if opinions.len() < MIN_SITES {
            return Err(Error::InvalidParameter(format!(
                "lattice needs at least {MIN_SITES} sites, got {}",
                opinions.len()
            )));
        }
        if let Some(i) = opinions.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter(format!("opinion at site {i} is not finite")));
        }
        Ok(Self { opinions, boundary })
    }

    /// I.i.d. uniform opinions on `[-1, 1]`.
    pub fn initial_config<R: Rng + ?Sized>(
        n_sites: usize,
        boundary: Boundary,
        rng: &mut R,
    ) -> Result<Self> {
        if n_sites < MIN_SITES {
            return Err(Error::InvalidParameter(format!(
                "lattice needs at least {MIN_SITES} sites, got {n_sites}"
            )));
        }
        let opinions = (0..n_sites).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        Ok(Self { opinions, boundary })
    }

    pub fn n_sites(&self) -> usize {
        self.opinions.len()
    }

    pub fn n_edges(&self) -> usize {
        match self.boundary {
            Boundary::Ring => self.opinions.len(),
            Boundary::Segment => self.opinions.len() - 1,
        }
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn opinions(&self) -> &[f64] {
        &self.opinions
    }

    pub fn opinion(&self, site: usize) -> f64 {
        self.opinions[site]
    }

    /// Sites joined by `edge`, left first.
    #[inline]
    pub fn endpoints(&self, edge: usize) -> (usize, usize) {
        let right = if edge + 1 == self.opinions.len() { 0 } else { edge + 1 };
        (edge, right)
    }

    pub fn check_edge(&self, edge: usize) -> Result<()> {
        if edge < self.n_edges() {
            Ok(())
        } else {
            Err(Error::InvalidEdge {
                edge,
                n_edges: self.n_edges(),
            })
        }
    }

    pub fn gap(&self, edge: usize) -> Result<f64> {
        self.check_edge(edge)?;
        Ok(self.gap_unchecked(edge))
    }

    /// Gap along an edge known to be valid.
    #[inline]
    pub fn gap_unchecked(&self, edge: usize) -> f64 {
        let (l, r) = self.endpoints(edge);
        (self.opinions[r] - self.opinions[l]).abs()
    }

    /// The edge `offset` steps away from `edge`, if it exists.
    #[inline]
    pub fn shifted_edge(&self, edge: usize, offset: isize) -> Option<usize> {
        let n = self.n_edges() as isize;
        let target = edge as isize + offset;
        match self.boundary {
            Boundary::Ring => Some(target.rem_euclid(n) as usize),
            Boundary::Segment => (0..n).contains(&target).then_some(target as usize),
        }
    }

    /// Graph distance between two edges.
    pub fn edge_distance(&self, a: usize, b: usize) -> usize {
        let d = a.abs_diff(b);
        match self.boundary {
            Boundary::Ring => d.min(self.n_edges() - d),
            Boundary::Segment => d,
        }
    }

    /// Edges `edge - 1`, `edge`, `edge + 1` that exist, in that order.
    #[inline]
    pub fn window(&self, edge: usize) -> impl Iterator<Item = usize> + '_ {
        [-1isize, 0, 1]
            .into_iter()
            .filter_map(move |off| self.shifted_edge(edge, off))
    }

    pub fn gaps(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_edges()).map(|e| self.gap_unchecked(e))
    }

    pub(crate) fn set_pair(&mut self, edge: usize, left: f64, right: f64) {
        let (l, r) = self.endpoints(edge);
        self.opinions[l] = left;
        self.opinions[r] = right;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::replica_rng;

    #[test]
    fn gap_definition() {
        let lat = OpinionLattice::from_opinions(vec![1.0, -1.0, 0.3, 0.3], Boundary::Segment).unwrap();
        assert_eq!(lat.gap(0).unwrap(), 2.0);
        assert_eq!(lat.gap(2).unwrap(), 0.0);
        assert!(matches!(lat.gap(3), Err(Error::InvalidEdge { edge: 3, n_edges: 3 })));
    }

    #[test]
    fn ring_wraps() {
        let lat = OpinionLattice::from_opinions(vec![0.0, 0.1, 0.2, 0.9], Boundary::Ring).unwrap();
        assert_eq!(lat.n_edges(), 4);
        assert_eq!(lat.endpoints(3), (3, 0));
        assert!((lat.gap(3).unwrap() - 0.9).abs() < 1e-15);
        assert_eq!(lat.shifted_edge(0, -1), Some(3));
        assert_eq!(lat.edge_distance(0, 3), 1);
        assert_eq!(lat.window(0).collect::<Vec<_>>(), vec![3, 0, 1]);
    }

    #[test]
    fn segment_window_truncates() {
        let lat = OpinionLattice::from_opinions(vec![0.0; 5], Boundary::Segment).unwrap();
        assert_eq!(lat.window(0).collect::<Vec<_>>(), vec![0, 1]);
        assert_eq!(lat.window(3).collect::<Vec<_>>(), vec![2, 3]);
        assert_eq!(lat.edge_distance(0, 3), 3);
    }

    #[test]
    fn too_small_rejected() {
        assert!(OpinionLattice::from_opinions(vec![0.0; 3], Boundary::Ring).is_err());
        let mut rng = replica_rng(1, 0);
        assert!(OpinionLattice::initial_config(3, Boundary::Ring, &mut rng).is_err());
    }

    #[test]
    fn initial_config_support_and_determinism() {
        let a = OpinionLattice::initial_config(10_000, Boundary::Ring, &mut replica_rng(5, 0)).unwrap();
        let b = OpinionLattice::initial_config(10_000, Boundary::Ring, &mut replica_rng(5, 0)).unwrap();
        assert_eq!(a, b);
        assert!(a.opinions().iter().all(|x| (-1.0..=1.0).contains(x)));
    }

    #[test]
    fn initial_config_mean() {
        let n = 1_000_000;
        let lat = OpinionLattice::initial_config(n, Boundary::Ring, &mut replica_rng(11, 0)).unwrap();
        let mean = lat.opinions().iter().sum::<f64>() / n as f64;
        let tol = 3.0 * (2.0 / 12f64.sqrt()) / 1e3;
        assert!(mean.abs() < tol, "mean {mean} outside 0 +- {tol}");
    }
}
