//! Explicit integrator for the mean-field density equation with `mu_minus = 1/2`:
//!
//! ```text
//! du(a)/dt = int_{|b| <= theta/2} u(a+b) u(a-b) db
//!          + int_{|b| > theta mu_plus} u(a+b) u(a + b + b/mu_plus) db
//!          - u(a)
//! ```
//!
//! The density lives on a uniform grid over `[-A, A]` and vanishes outside.
//! The `b` nodes are multiples of the grid spacing, so `u(a +- b)` is read
//! straight off the grid; only `u(a + b + b/mu_plus)` needs linear
//! interpolation.

use std::io::{self, Write};

use serde::Serialize;

use crate::error::{Error, Result};

/// Relative slack for closed-interval membership in the escalation algebra.
const MEMBERSHIP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityGrid {
    values: Vec<f64>,
    half_width: f64,
    da: f64,
    time: f64,
    theta: f64,
    mu_plus: f64,
}

/// Precomputed quadrature for one grid: node offsets and weights.
#[derive(Debug, Clone)]
struct Quadrature {
    /// `(j, weight)` for the attraction integral.
    attraction: Vec<(isize, f64)>,
    /// `(j, weight, k, frac)`: node `b = j da`, and `b (1 + 1/mu_plus) = (k + frac) da`.
    repulsion: Vec<(isize, f64, isize, f64)>,
}

impl DensityGrid {
    pub fn zeros(theta: f64, mu_plus: f64, half_width: f64, da: f64) -> Result<Self> {
        if !(theta > 0.0 && theta < 2.0) {
            return Err(Error::InvalidParameter(format!("theta must lie in (0, 2), got {theta}")));
        }
        if !(0.0..=0.5).contains(&mu_plus) {
            return Err(Error::InvalidParameter(format!("mu_plus must lie in [0, 1/2], got {mu_plus}")));
        }
        if !(half_width > 1.0 && half_width.is_finite()) {
            return Err(Error::InvalidParameter(format!("half width must exceed 1, got {half_width}")));
        }
        if !(da > 0.0) {
            return Err(Error::InvalidParameter(format!("grid spacing must be positive, got {da}")));
        }
        let cells = 2.0 * half_width / da;
        let n_cells = cells.round();
        if (cells - n_cells).abs() > 1e-9 * cells {
            return Err(Error::InvalidParameter(format!(
                "grid spacing {da} does not divide the domain [-{half_width}, {half_width}]"
            )));
        }
        Ok(Self {
            values: vec![0.0; n_cells as usize + 1],
            half_width,
            da,
            time: 0.0,
            theta,
            mu_plus,
        })
    }

    /// `u(a, 0) = 1/2` on `[-1, 1]`, zero elsewhere.
    pub fn uniform_initial(theta: f64, mu_plus: f64, half_width: f64, da: f64) -> Result<Self> {
        Self::from_fn(theta, mu_plus, half_width, da, |a| {
            if a.abs() <= 1.0 + 1e-9 * da {
                0.5
            } else {
                0.0
            }
        })
    }

    pub fn from_fn(
        theta: f64,
        mu_plus: f64,
        half_width: f64,
        da: f64,
        f: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let mut grid = Self::zeros(theta, mu_plus, half_width, da)?;
        for i in 0..grid.values.len() {
            let v = f(grid.a(i));
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "density must be finite and nonnegative, got {v} at a = {}",
                    grid.a(i)
                )));
            }
            grid.values[i] = v;
        }
        Ok(grid)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn da(&self) -> f64 {
        self.da
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// Grid abscissa of node `i`.
    pub fn a(&self, i: usize) -> f64 {
        // Computed from both ends so the grid is exactly symmetric.
        let n = self.values.len() - 1;
        if 2 * i <= n {
            -self.half_width + i as f64 * self.da
        } else {
            self.half_width - (n - i) as f64 * self.da
        }
    }

    #[inline]
    fn at(&self, idx: isize) -> f64 {
        if idx < 0 {
            0.0
        } else {
            self.values.get(idx as usize).copied().unwrap_or(0.0)
        }
    }

    /// Linear interpolation, zero off the grid.
    pub fn value_at(&self, x: f64) -> f64 {
        let pos = (x + self.half_width) / self.da;
        let lo = pos.floor();
        let w = pos - lo;
        let lo = lo as isize;
        (1.0 - w) * self.at(lo) + w * self.at(lo + 1)
    }

    fn quadrature(&self) -> Quadrature {
        let da = self.da;
        let half = self.theta / 2.0;
        let j_att = (half / da + 1e-12).floor() as isize;
        let attraction = if j_att == 0 {
            vec![(0, self.theta)]
        } else {
            let end = da / 2.0 + (half - j_att as f64 * da);
            (-j_att..=j_att)
                .map(|j| (j, if j.abs() == j_att { end } else { da }))
                .collect()
        };

        let mut repulsion = Vec::new();
        if self.mu_plus > 0.0 {
            let cut = self.theta * self.mu_plus;
            let j_min = (cut / da).floor() as isize + 1;
            let j_max = self.values.len() as isize;
            let scale = 1.0 + 1.0 / self.mu_plus;
            let first = da / 2.0 + (j_min as f64 * da - cut);
            for mag in j_min..=j_max {
                let w = if mag == j_min {
                    first
                } else if mag == j_max {
                    da / 2.0
                } else {
                    da
                };
                for j in [-mag, mag] {
                    let pos = j as f64 * scale;
                    let k = pos.floor();
                    repulsion.push((j, w, k as isize, pos - k));
                }
            }
        }
        Quadrature {
            attraction,
            repulsion,
        }
    }

    fn attraction_at_index(&self, q: &Quadrature, i: isize) -> f64 {
        q.attraction
            .iter()
            .map(|&(j, w)| w * self.at(i + j) * self.at(i - j))
            .sum()
    }

    fn repulsion_at_index(&self, q: &Quadrature, i: isize) -> f64 {
        let mut acc = 0.0;
        for &(j, w, k, frac) in &q.repulsion {
            let near = self.at(i + j);
            if near == 0.0 {
                continue;
            }
            let far = (1.0 - frac) * self.at(i + k) + frac * self.at(i + k + 1);
            acc += w * near * far;
        }
        acc
    }

    /// Attraction gain at every node.
    pub fn attraction_integral(&self) -> Vec<f64> {
        let q = self.quadrature();
        (0..self.len() as isize).map(|i| self.attraction_at_index(&q, i)).collect()
    }

    /// Repulsion gain at every node.
    pub fn repulsion_integral(&self) -> Vec<f64> {
        let q = self.quadrature();
        (0..self.len() as isize).map(|i| self.repulsion_at_index(&q, i)).collect()
    }

    /// Repulsion gain at an arbitrary opinion `a`, interpolating both factors.
    pub fn repulsion_integral_at(&self, a: f64) -> f64 {
        let q = self.quadrature();
        let scale = 1.0 + 1.0 / self.mu_plus.max(f64::MIN_POSITIVE);
        q.repulsion
            .iter()
            .map(|&(j, w, _, _)| {
                let b = j as f64 * self.da;
                w * self.value_at(a + b) * self.value_at(a + b * scale)
            })
            .sum()
    }

    /// `du/dt` at every node.
    pub fn rhs(&self) -> Vec<f64> {
        let q = self.quadrature();
        let (lo, hi) = match self.support_indices() {
            Some(s) => s,
            None => return vec![0.0; self.len()],
        };
        (0..self.len() as isize)
            .map(|i| {
                let u = self.values[i as usize];
                let att = self.attraction_at_index(&q, i);
                let rep = if self.mu_plus > 0.0 {
                    self.repulsion_in_support(&q, i, lo as isize, hi as isize)
                } else {
                    0.0
                };
                att + rep - u
            })
            .collect()
    }

    fn repulsion_in_support(&self, q: &Quadrature, i: isize, lo: isize, hi: isize) -> f64 {
        let mut acc = 0.0;
        for &(j, w, k, frac) in &q.repulsion {
            let near_idx = i + j;
            if near_idx < lo || near_idx > hi {
                continue;
            }
            let far_idx = i + k;
            if far_idx + 1 < lo || far_idx > hi {
                continue;
            }
            let far = (1.0 - frac) * self.at(far_idx) + frac * self.at(far_idx + 1);
            acc += w * self.values[near_idx as usize] * far;
        }
        acc
    }

    fn support_indices(&self) -> Option<(usize, usize)> {
        let lo = self.values.iter().position(|&v| v > 0.0)?;
        let hi = self.values.iter().rposition(|&v| v > 0.0)?;
        Some((lo, hi))
    }

    /// One explicit Euler step followed by clipping at zero.
    pub fn step(&mut self, dt: f64) -> Result<StepInfo> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("time step must be positive, got {dt}")));
        }
        let rhs = self.rhs();
        let mut clipped = 0.0;
        for (i, (u, r)) in self.values.iter_mut().zip(&rhs).enumerate() {
            let next = *u + dt * r;
            if !next.is_finite() {
                return Err(Error::NonFinite {
                    time: self.time + dt,
                    what: format!("density at node {i}"),
                });
            }
            if next < 0.0 {
                clipped -= next;
                *u = 0.0;
            } else {
                *u = next;
            }
        }
        self.time += dt;
        Ok(StepInfo {
            clipped_mass: clipped * self.da,
            max_abs_rhs: rhs.iter().fold(0.0, |m: f64, r| m.max(r.abs())),
        })
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.da
    }

    /// Riemann mass of the nodes inside `[lo, hi]`.
    pub fn mass_in(&self, lo: f64, hi: f64) -> f64 {
        let tol = 1e-9 * self.da;
        (0..self.len())
            .filter(|&i| (lo - tol..=hi + tol).contains(&self.a(i)))
            .map(|i| self.values[i])
            .sum::<f64>()
            * self.da
    }

    /// Largest `|a|` with `u(a) > delta`, or zero when there is none.
    pub fn support_radius(&self, delta: f64) -> f64 {
        (0..self.len())
            .filter(|&i| self.values[i] > delta)
            .map(|i| self.a(i).abs())
            .fold(0.0, f64::max)
    }

    pub fn peak(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Largest `|a|` with `u(a) > level * max u`.
    pub fn relative_support_radius(&self, level: f64) -> f64 {
        let peak = self.peak();
        if peak == 0.0 {
            0.0
        } else {
            self.support_radius(level * peak)
        }
    }

    /// `max |u(a) - u(-a)|`.
    pub fn asymmetry(&self) -> f64 {
        let n = self.len();
        (0..n / 2)
            .map(|i| (self.values[i] - self.values[n - 1 - i]).abs())
            .fold(0.0, f64::max)
    }

    pub fn write_profile_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "a,u")?;
        for i in 0..self.len() {
            writeln!(w, "{},{}", self.a(i), self.values[i])?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepInfo {
    /// Mass removed by clipping negative values.
    pub clipped_mass: f64,
    pub max_abs_rhs: f64,
}

/// Interval data showing that a profile bounded below by `epsilon` on
/// `I = [-c0 - 2 eps, -c0] u [c0, c0 + 2 eps]` creates mass at `c_plus`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EscalationWitness {
    pub theta: f64,
    pub mu_plus: f64,
    pub c0_profile: f64,
    pub epsilon: f64,
    pub i_eps: [(f64, f64); 2],
    pub j_eps: (f64, f64),
    pub c_plus: f64,
    /// `2 eps^3 / (1 + 1/mu_plus)`.
    pub rate_bound: f64,
}

impl EscalationWitness {
    pub fn new(theta: f64, mu_plus: f64, c0_profile: f64, epsilon: f64) -> Result<Self> {
        if !(mu_plus > 0.0 && mu_plus <= 0.5) {
            return Err(Error::Precondition(format!("need 0 < mu_plus <= 1/2, got {mu_plus}")));
        }
        if !(c0_profile >= theta / 2.0) {
            return Err(Error::Precondition(format!(
                "profile constant {c0_profile} is below theta/2 = {}",
                theta / 2.0
            )));
        }
        if !(epsilon >= 0.0) {
            return Err(Error::Precondition(format!("epsilon must be nonnegative, got {epsilon}")));
        }
        let spread = 1.0 + 1.0 / mu_plus;
        let centre = -2.0 * mu_plus * (c0_profile + epsilon);
        let half = epsilon / spread;
        Ok(Self {
            theta,
            mu_plus,
            c0_profile,
            epsilon,
            i_eps: [
                (-c0_profile - 2.0 * epsilon, -c0_profile),
                (c0_profile, c0_profile + 2.0 * epsilon),
            ],
            j_eps: (centre - half, centre + half),
            c_plus: (2.0 * mu_plus + 1.0) * (c0_profile + epsilon),
            rate_bound: 2.0 * epsilon.powi(3) / spread,
        })
    }

    /// Witness for the uniform initial profile: `c0 = theta/2`, `eps = 1/2 - theta/4`.
    pub fn initial(theta: f64, mu_plus: f64) -> Result<Self> {
        Self::new(theta, mu_plus, theta / 2.0, 0.5 - theta / 4.0)
    }

    pub fn in_i_eps(&self, x: f64) -> bool {
        let tol = MEMBERSHIP_TOL * (1.0 + x.abs());
        self.i_eps
            .iter()
            .any(|&(lo, hi)| x >= lo - tol && x <= hi + tol)
    }

    /// `u = eps` on `I_eps`, zero elsewhere.
    pub fn profile(&self, half_width: f64, da: f64) -> Result<DensityGrid> {
        DensityGrid::from_fn(self.theta, self.mu_plus, half_width, da, |a| {
            if self.in_i_eps(a) {
                self.epsilon
            } else {
                0.0
            }
        })
    }
}

/// Checks `c_plus + b` and `c_plus + b + b/mu_plus` both lie in `I_eps` for
/// `n_samples` evenly spaced `b` across `J_eps`, endpoints included.
pub fn check_escalation_intervals(
    theta: f64,
    mu_plus: f64,
    c0_profile: f64,
    epsilon: f64,
    n_samples: usize,
) -> Result<bool> {
    let w = EscalationWitness::new(theta, mu_plus, c0_profile, epsilon)?;
    if epsilon == 0.0 {
        log::warn!("epsilon = 0: escalation interval is degenerate, claim holds vacuously");
        return Ok(true);
    }
    let n = n_samples.max(2);
    let (lo, hi) = w.j_eps;
    Ok((0..n).all(|k| {
        let b = if k == n - 1 {
            hi
        } else {
            lo + (hi - lo) * k as f64 / (n - 1) as f64
        };
        let first = w.c_plus + b;
        w.in_i_eps(first) && w.in_i_eps(first + b / mu_plus)
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanfieldConfig {
    pub theta: f64,
    pub mu_plus: f64,
    pub half_width: f64,
    pub da: f64,
    pub dt: f64,
    pub t_max: f64,
    /// Time between recorded rows.
    pub sample_interval: f64,
    /// Support radius threshold, relative to the current peak density.
    pub support_level: f64,
}

impl MeanfieldConfig {
    pub fn canonical() -> Self {
        Self {
            theta: 1.0,
            mu_plus: 0.25,
            half_width: 8.0,
            da: 0.02,
            dt: 0.005,
            t_max: 20.0,
            sample_interval: 0.5,
            support_level: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanfieldRow {
    pub t: f64,
    pub support_radius: f64,
    pub mass_total: f64,
    pub mass_in_unit_interval: f64,
    pub u_at_c_plus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanfieldRun {
    pub config: MeanfieldConfig,
    pub c_plus: f64,
    pub rows: Vec<MeanfieldRow>,
    pub final_support_radius: f64,
    pub support_exceeded_one: bool,
    pub max_clipped_mass_per_step: f64,
    pub max_asymmetry: f64,
    /// Density above the support level reached the edge of the domain.
    pub boundary_reached: bool,
    pub steps: u64,
    #[serde(skip)]
    pub final_grid: DensityGrid,
}

impl MeanfieldRun {
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,support_radius,mass_total,mass_in_unit_interval,u_at_c_plus")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{}",
                r.t, r.support_radius, r.mass_total, r.mass_in_unit_interval, r.u_at_c_plus
            )?;
        }
        Ok(())
    }
}

/// Integrates from the uniform profile on `[-1, 1]` up to `t_max`.
pub fn run_meanfield(config: &MeanfieldConfig) -> Result<MeanfieldRun> {
    if !(config.t_max > 0.0 && config.sample_interval > 0.0 && config.support_level > 0.0) {
        return Err(Error::InvalidParameter(
            "t_max, sample interval and support level must be positive".into(),
        ));
    }
    let mut grid = DensityGrid::uniform_initial(config.theta, config.mu_plus, config.half_width, config.da)?;
    let c_plus = (2.0 * config.mu_plus + 1.0) * (0.5 + config.theta / 4.0);
    let n_steps = (config.t_max / config.dt).round().max(1.0) as u64;
    let sample_every = ((config.sample_interval / config.dt).round() as u64).max(1);

    let row = |g: &DensityGrid| MeanfieldRow {
        t: g.time(),
        support_radius: g.relative_support_radius(config.support_level),
        mass_total: g.mass(),
        mass_in_unit_interval: g.mass_in(-1.0, 1.0),
        u_at_c_plus: g.value_at(c_plus),
    };
    let mut rows = vec![row(&grid)];
    let mut max_clipped = 0.0f64;
    let mut max_asym = 0.0f64;
    let mut boundary_reached = false;
    for s in 1..=n_steps {
        let info = grid.step(config.dt)?;
        grid.time = s as f64 * config.dt;
        max_clipped = max_clipped.max(info.clipped_mass);
        let edge = grid.values[0].max(grid.values[grid.len() - 1]);
        if edge > config.support_level * grid.peak() && !boundary_reached {
            boundary_reached = true;
            log::warn!(
                "density reached the domain boundary +-{} at t = {}",
                config.half_width,
                grid.time()
            );
        }
        if s % sample_every == 0 || s == n_steps {
            max_asym = max_asym.max(grid.asymmetry());
            rows.push(row(&grid));
        }
    }
    let final_support_radius = grid.relative_support_radius(config.support_level);
    Ok(MeanfieldRun {
        config: *config,
        c_plus,
        support_exceeded_one: final_support_radius > 1.0 + 1e-9,
        final_support_radius,
        rows,
        max_clipped_mass_per_step: max_clipped,
        max_asymmetry: max_asym,
        boundary_reached,
        steps: n_steps,
        final_grid: grid,
    })
}
