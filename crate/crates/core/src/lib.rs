//! Deffuant opinion dynamics with attraction and repulsion on a one-dimensional
//! lattice.
//!
//! Neighbors whose opinions differ by at most the confidence threshold move
//! toward each other; neighbors that disagree by more move apart. The crate
//! provides the exact continuous-time simulator, the edge-gap trackers that
//! follow locally maximal disagreements, the dominated multiplicative jump
//! process with its supermartingale certificate, brute-force checks of each
//! step of the divergence argument, and an explicit integrator for the
//! mean-field density equation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod events;
pub mod lattice;
pub mod meanfield;
pub mod model;
pub mod rng;
pub mod simulation;
pub mod stats;
pub mod tracker;

pub use error::{Error, Result};
pub use events::{Event, EventStream};
pub use lattice::{Boundary, OpinionLattice};
pub use model::{interact, Branch, InteractionOutcome, ModelParams};
pub use simulation::{LatticeRun, RunOptions};
pub use tracker::TrackerState;
