//! Flat JSON experiment configuration with command-line overrides.

use std::path::{Path, PathBuf};

use deffuant_core::{Boundary, ModelParams};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

pub const DEFAULT_THRESHOLDS: [f64; 4] = [1e1, 1e2, 1e3, 1e4];

/// Every field optional: the shape of both the config file and the flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    pub theta: Option<f64>,
    pub mu_minus: Option<f64>,
    pub mu_plus: Option<f64>,
    pub sites: Option<usize>,
    pub boundary: Option<Boundary>,
    pub t_max: Option<f64>,
    pub seed: Option<u64>,
    pub replicas: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub origin_stride: Option<usize>,
    pub thresholds: Option<Vec<f64>>,
    pub sample_interval: Option<f64>,
    pub history_stride: Option<u64>,
    pub trace_replicas: Option<u64>,
    pub dump_events: Option<bool>,
    pub svg: Option<bool>,
    pub x0_over_d: Option<f64>,
    pub n_over_d: Option<f64>,
    pub tol: Option<f64>,
    pub half_width: Option<f64>,
    pub da: Option<f64>,
    pub dt: Option<f64>,
    pub support_level: Option<f64>,
    pub sample_scale: Option<f64>,
}

impl ConfigOverrides {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path.display().to_string(), e))?;
        serde_json::from_str(&text)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
    }

    /// Fields set in `other` win.
    pub fn overlay(self, other: ConfigOverrides) -> Self {
        macro_rules! pick {
            ($($f:ident),*) => {
                ConfigOverrides { $($f: other.$f.or(self.$f)),* }
            };
        }
        pick!(
            theta, mu_minus, mu_plus, sites, boundary, t_max, seed, replicas, threads, out,
            origin_stride, thresholds, sample_interval, history_stride, trace_replicas,
            dump_events, svg, x0_over_d, n_over_d, tol, half_width, da, dt, support_level,
            sample_scale
        )
    }
}

/// Which subcommand a configuration is resolved for; fixes the defaults of
/// fields whose natural value differs between experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Lattice,
    XProcess,
    MeanField,
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub theta: f64,
    pub mu_minus: f64,
    pub mu_plus: f64,
    pub sites: usize,
    pub boundary: Boundary,
    pub t_max: f64,
    pub seed: u64,
    pub replicas: u64,
    /// Worker threads for replica parallelism; 0 picks the machine default.
    pub threads: usize,
    pub out: PathBuf,
    /// Track every `origin_stride`-th edge; `None` uses the size-based default.
    pub origin_stride: Option<usize>,
    pub thresholds: Vec<f64>,
    pub sample_interval: f64,
    pub history_stride: u64,
    pub trace_replicas: u64,
    pub dump_events: bool,
    pub svg: bool,
    pub x0_over_d: f64,
    pub n_over_d: f64,
    pub tol: f64,
    pub half_width: f64,
    pub da: f64,
    pub dt: f64,
    pub support_level: f64,
    pub sample_scale: f64,
}

impl ExperimentConfig {
    pub fn resolve(o: ConfigOverrides, purpose: Purpose) -> Result<Self> {
        let t_max = o.t_max.unwrap_or(match purpose {
            Purpose::Lattice | Purpose::Other => 200.0,
            Purpose::XProcess => 50.0,
            Purpose::MeanField => 20.0,
        });
        let replicas = o.replicas.unwrap_or(match purpose {
            Purpose::XProcess => 100_000,
            _ => 1,
        });
        let cfg = Self {
            theta: o.theta.unwrap_or(1.0),
            mu_minus: o.mu_minus.unwrap_or(0.5),
            mu_plus: o.mu_plus.unwrap_or(0.25),
            sites: o.sites.unwrap_or(1000),
            boundary: o.boundary.unwrap_or_default(),
            t_max,
            seed: o.seed.unwrap_or(0),
            replicas,
            threads: o.threads.unwrap_or(0),
            out: o.out.unwrap_or_else(|| PathBuf::from("out")),
            origin_stride: o.origin_stride,
            thresholds: o.thresholds.unwrap_or_else(|| DEFAULT_THRESHOLDS.to_vec()),
            sample_interval: o.sample_interval.unwrap_or(match purpose {
                Purpose::MeanField => 0.5,
                _ => t_max / 200.0,
            }),
            history_stride: o.history_stride.unwrap_or(16),
            trace_replicas: o.trace_replicas.unwrap_or(1),
            dump_events: o.dump_events.unwrap_or(false),
            svg: o.svg.unwrap_or(false),
            x0_over_d: o.x0_over_d.unwrap_or(2.001),
            n_over_d: o.n_over_d.unwrap_or(1000.0),
            tol: o.tol.unwrap_or(1e-9),
            half_width: o.half_width.unwrap_or(8.0),
            da: o.da.unwrap_or(0.02),
            dt: o.dt.unwrap_or(0.005),
            support_level: o.support_level.unwrap_or(1e-6),
            sample_scale: o.sample_scale.unwrap_or(1.0),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        self.params()?;
        if self.replicas < 1 {
            return bad("replicas must be at least 1".into());
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return bad(format!("t_max must be positive, got {}", self.t_max));
        }
        if self.sites < deffuant_core::lattice::MIN_SITES {
            return bad(format!("sites must be at least 4, got {}", self.sites));
        }
        if self.origin_stride == Some(0) {
            return bad("origin_stride must be positive".into());
        }
        if self.thresholds.iter().any(|t| !t.is_finite()) {
            return bad("thresholds must be finite".into());
        }
        if !(self.sample_interval > 0.0) {
            return bad(format!("sample_interval must be positive, got {}", self.sample_interval));
        }
        if !(self.sample_scale > 0.0) {
            return bad(format!("sample_scale must be positive, got {}", self.sample_scale));
        }
        for (name, v) in [("tol", self.tol), ("da", self.da), ("dt", self.dt), ("support_level", self.support_level)] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        Ok(())
    }

    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::new(self.theta, self.mu_minus, self.mu_plus)
            .map_err(|e| HarnessError::Config(e.to_string()))
    }

    /// Creates the output directory and checks it is writable.
    pub fn prepare_out_dir(&self) -> Result<&Path> {
        let dir = self.out.as_path();
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir.display().to_string(), e))?;
        let probe = dir.join(".write-probe");
        std::fs::write(&probe, b"").map_err(|e| HarnessError::io(probe.display().to_string(), e))?;
        let _ = std::fs::remove_file(&probe);
        Ok(dir)
    }

    pub fn origins(&self, n_edges: usize) -> Vec<usize> {
        match self.origin_stride {
            Some(stride) => (0..n_edges).step_by(stride).collect(),
            None => deffuant_core::simulation::default_origins(n_edges),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_file() {
        let file: ConfigOverrides =
            serde_json::from_str(r#"{"theta": 0.5, "sites": 64, "boundary": "segment"}"#).unwrap();
        let flags = ConfigOverrides {
            theta: Some(0.8),
            ..Default::default()
        };
        let cfg = ExperimentConfig::resolve(file.overlay(flags), Purpose::Lattice).unwrap();
        assert_eq!(cfg.theta, 0.8);
        assert_eq!(cfg.sites, 64);
        assert_eq!(cfg.boundary, Boundary::Segment);
        assert_eq!(cfg.mu_plus, 0.25);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(serde_json::from_str::<ConfigOverrides>(r#"{"thetta": 1}"#).is_err());
    }

    #[test]
    fn invalid_values_rejected() {
        let bad = |o: ConfigOverrides| ExperimentConfig::resolve(o, Purpose::Lattice).is_err();
        assert!(bad(ConfigOverrides { theta: Some(2.0), ..Default::default() }));
        assert!(bad(ConfigOverrides { replicas: Some(0), ..Default::default() }));
        assert!(bad(ConfigOverrides { t_max: Some(0.0), ..Default::default() }));
        assert!(bad(ConfigOverrides { sites: Some(3), ..Default::default() }));
    }

    #[test]
    fn purpose_defaults() {
        let x = ExperimentConfig::resolve(ConfigOverrides::default(), Purpose::XProcess).unwrap();
        assert_eq!(x.replicas, 100_000);
        assert_eq!(x.t_max, 50.0);
        let m = ExperimentConfig::resolve(ConfigOverrides::default(), Purpose::MeanField).unwrap();
        assert_eq!(m.t_max, 20.0);
        let l = ExperimentConfig::resolve(ConfigOverrides::default(), Purpose::Lattice).unwrap();
        assert_eq!(l.thresholds, DEFAULT_THRESHOLDS.to_vec());
        assert_eq!(l.sample_interval, 1.0);
    }
}
