//! Experiment driver for the attraction/repulsion Deffuant model: config
//! handling, replica parallelism and the `deffuant` command line.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis_cmds;
pub mod cli;
pub mod config;
pub mod error;
pub mod output;
pub mod plot;
pub mod simulate;
pub mod verify;

pub use config::{ConfigOverrides, ExperimentConfig, Purpose};
pub use error::{HarnessError, Result};
