//! Skill-density dynamics `d mu/dt = div(sigma grad mu - mu grad pi)` on a
//! bounded interval with no-flux walls.
//!
//! Fluxes use the exponential-fitting (Scharfetter-Gummel) form, so the
//! explicit step is a Markov chain whose stationary law is exactly the
//! discrete Gibbs density `exp(pi / sigma)`. With `sigma -> 0` it reduces to
//! first-order upwinding.

use serde::{Deserialize, Serialize};

use crate::econ::{self, ModelParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkillGrid {
    pub lower: f64,
    pub upper: f64,
    pub n_cells: usize,
    pub dx: f64,
}

impl SkillGrid {
    pub fn new(lower: f64, upper: f64, n_cells: usize) -> Result<Self> {
        if !(upper > lower) {
            return Err(Error::invalid("upper", "must exceed lower"));
        }
        if n_cells < 16 {
            return Err(Error::invalid("n_cells", "must be at least 16"));
        }
        Ok(SkillGrid { lower, upper, n_cells, dx: (upper - lower) / n_cells as f64 })
    }

    pub fn center(&self, i: usize) -> f64 {
        self.lower + (i as f64 + 0.5) * self.dx
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n_cells).map(|i| self.center(i)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkillDensity {
    pub grid: SkillGrid,
    pub mass: Vec<f64>,
}

impl SkillDensity {
    pub fn new(grid: SkillGrid, mass: Vec<f64>) -> Result<Self> {
        if mass.len() != grid.n_cells {
            return Err(Error::invalid("mass", "length must equal n_cells"));
        }
        if mass.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::invalid("mass", "cells must be finite and >= 0"));
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("mass", format!("total mass {total} != 1")));
        }
        Ok(SkillDensity { grid, mass })
    }

    /// Normalizes non-negative weights into a density.
    pub fn from_weights(grid: SkillGrid, weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::invalid("mass", "weights must have positive finite total"));
        }
        Ok(SkillDensity { grid, mass: weights.iter().map(|w| w / total).collect() })
    }

    pub fn uniform(grid: SkillGrid) -> Self {
        let n = grid.n_cells;
        SkillDensity { grid, mass: vec![1.0 / n as f64; n] }
    }

    /// Gaussian bump truncated to the grid, sampled at cell centers.
    pub fn truncated_gaussian(grid: SkillGrid, mean: f64, sd: f64) -> Result<Self> {
        let w = grid.centers().iter().map(|s| (-0.5 * ((s - mean) / sd).powi(2)).exp()).collect();
        Self::from_weights(grid, w)
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.grid.centers().iter().zip(&self.mass).map(|(s, m)| s * m).sum()
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        self.grid.centers().iter().zip(&self.mass).map(|(s, m)| (s - mu).powi(2) * m).sum()
    }

    pub fn l1_distance(&self, other: &SkillDensity) -> f64 {
        self.mass.iter().zip(&other.mass).map(|(a, b)| (a - b).abs()).sum()
    }

    /// Sums blocks of `factor` cells onto a coarser grid.
    pub fn coarsen(&self, factor: usize) -> Result<SkillDensity> {
        if factor == 0 || !self.grid.n_cells.is_multiple_of(factor) {
            return Err(Error::invalid("factor", "must divide n_cells"));
        }
        let grid = SkillGrid::new(self.grid.lower, self.grid.upper, self.grid.n_cells / factor)?;
        let mass = self.mass.chunks(factor).map(|c| c.iter().sum()).collect();
        Ok(SkillDensity { grid, mass })
    }
}

/// Per-cell profit potential, optionally shifted by the congestion term.
#[derive(Debug, Clone, PartialEq)]
pub enum Landscape {
    Fixed(Vec<f64>),
    /// `base - beta ln(1 + eta D_A(mu))`, with `D_A` the mass on `ai_cells`.
    Coupled {
        base: Vec<f64>,
        ai_cells: Vec<bool>,
        beta: f64,
        eta: f64,
    },
}

impl Landscape {
    pub fn values(&self, density: &SkillDensity) -> Vec<f64> {
        match self {
            Landscape::Fixed(v) => v.clone(),
            Landscape::Coupled { base, ai_cells, beta, eta } => {
                let d_a = ai_volume(density, ai_cells);
                let shift = econ::penalty(*beta, *eta, d_a);
                base.iter().map(|b| b - shift).collect()
            }
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Landscape::Fixed(v) => v.len(),
            Landscape::Coupled { base, .. } => base.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn ai_volume(density: &SkillDensity, ai_cells: &[bool]) -> f64 {
    density.mass.iter().zip(ai_cells).filter(|(_, ai)| **ai).map(|(m, _)| m).sum()
}

/// Coupled landscape `max(pi_H(s), Pi_A) - Phi(D_A(mu))` from model parameters.
pub fn baseline_landscape(grid: &SkillGrid, p: &ModelParams) -> Result<Landscape> {
    let cap_price = p.schedule.price(p.q_bar_a);
    let pi_a = econ::profit_ai(cap_price, p)?;
    let mut base = Vec::with_capacity(grid.n_cells);
    let mut ai_cells = Vec::with_capacity(grid.n_cells);
    for s in grid.centers() {
        let pi_h = econ::profit_human(s.max(0.0), &p.schedule, p)?;
        base.push(pi_h.max(pi_a));
        ai_cells.push(pi_a > pi_h);
    }
    Ok(Landscape::Coupled { base, ai_cells, beta: p.beta, eta: p.eta })
}

/// Per-cell profit values at the current density.
pub fn profit_landscape(density: &SkillDensity, p: &ModelParams) -> Result<Vec<f64>> {
    Ok(baseline_landscape(&density.grid, p)?.values(density))
}

/// Bernoulli function `x / (e^x - 1)`.
pub fn bernoulli(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - 0.5 * x
    } else {
        x / x.exp_m1()
    }
}

/// `(sigma B(-d/sigma), sigma B(d/sigma))`: scaled transfer rates right and
/// left across a face with potential jump `d`, including the `sigma = 0` limit.
fn face_rates(d: f64, sigma: f64) -> (f64, f64) {
    if sigma == 0.0 {
        (d.max(0.0), (-d).max(0.0))
    } else {
        (sigma * bernoulli(-d / sigma), sigma * bernoulli(d / sigma))
    }
}

/// Largest step from the documented bound `dx^2 / (2 sigma + dx max|pi'|)`.
pub fn cfl_bound(pi: &[f64], grid: &SkillGrid, sigma: f64) -> f64 {
    let slope = pi.windows(2).map(|w| ((w[1] - w[0]) / grid.dx).abs()).fold(0.0, f64::max);
    let denom = 2.0 * sigma + grid.dx * slope;
    if denom == 0.0 {
        f64::INFINITY
    } else {
        grid.dx * grid.dx / denom
    }
}

/// Largest step keeping every cell's outflow fraction at most one.
pub fn positivity_bound(pi: &[f64], grid: &SkillGrid, sigma: f64) -> f64 {
    let n = pi.len();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let mut out = 0.0;
        if i + 1 < n {
            out += face_rates(pi[i + 1] - pi[i], sigma).0;
        }
        if i > 0 {
            out += face_rates(pi[i] - pi[i - 1], sigma).1;
        }
        worst = worst.max(out);
    }
    if worst == 0.0 {
        f64::INFINITY
    } else {
        grid.dx * grid.dx / worst
    }
}

pub fn stable_dt(pi: &[f64], grid: &SkillGrid, sigma: f64) -> f64 {
    cfl_bound(pi, grid, sigma).min(positivity_bound(pi, grid, sigma))
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepReport {
    /// Total negative mass removed by clipping.
    pub clipped: f64,
}

/// One explicit step with a given landscape. Returns the clipped magnitude.
pub fn fp_step_with(density: &mut SkillDensity, pi: &[f64], dt: f64, sigma: f64) -> Result<StepReport> {
    let grid = density.grid;
    let bound = stable_dt(pi, &grid, sigma);
    if !(dt > 0.0) || dt > bound * (1.0 + 1e-12) {
        return Err(Error::StepSize { dt, bound });
    }
    let n = grid.n_cells;
    let scale = dt / (grid.dx * grid.dx);
    let m = &density.mass;
    let mut next = m.clone();
    for i in 0..n - 1 {
        let (r, l) = face_rates(pi[i + 1] - pi[i], sigma);
        let flux = scale * (r * m[i] - l * m[i + 1]);
        next[i] -= flux;
        next[i + 1] += flux;
    }
    let mut clipped = 0.0;
    for v in next.iter_mut() {
        if *v < 0.0 {
            clipped -= *v;
            *v = 0.0;
        }
    }
    if clipped > 0.0 {
        let total: f64 = next.iter().sum();
        for v in next.iter_mut() {
            *v /= total;
        }
    }
    density.mass = next;
    Ok(StepReport { clipped })
}

/// One explicit step against the model's coupled landscape.
pub fn fp_step(density: &SkillDensity, dt: f64, p: &ModelParams) -> Result<SkillDensity> {
    let pi = profit_landscape(density, p)?;
    let mut next = density.clone();
    fp_step_with(&mut next, &pi, dt, p.sigma)?;
    Ok(next)
}

/// `-sum pi m + sigma sum m ln(m / dx)`, with empty cells contributing 0.
pub fn free_energy_with(density: &SkillDensity, pi: &[f64], sigma: f64) -> f64 {
    let dx = density.grid.dx;
    let mut energy = 0.0;
    let mut entropy = 0.0;
    for (m, v) in density.mass.iter().zip(pi) {
        energy -= v * m;
        if *m > 0.0 {
            entropy += m * (m / dx).ln();
        }
    }
    energy + sigma * entropy
}

pub fn free_energy(density: &SkillDensity, p: &ModelParams) -> Result<f64> {
    let pi = profit_landscape(density, p)?;
    Ok(free_energy_with(density, &pi, p.sigma))
}

/// Normalized `exp(pi / sigma)` on the grid.
pub fn gibbs_fixed(grid: SkillGrid, pi: &[f64], sigma: f64) -> Result<SkillDensity> {
    if !(sigma > 0.0) {
        return Err(Error::invalid("sigma", "must be > 0 for a Gibbs density"));
    }
    let top = pi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w = pi.iter().map(|v| ((v - top) / sigma).exp()).collect();
    SkillDensity::from_weights(grid, w)
}

pub const GIBBS_DAMPING: f64 = 0.3;

#[derive(Debug, Clone, PartialEq)]
pub struct GibbsResult {
    pub density: SkillDensity,
    pub iterations: usize,
    pub converged: bool,
    pub l1_change: f64,
}

/// Self-consistent Gibbs density: damped landscape <-> Gibbs iteration.
pub fn gibbs_stationary(grid: SkillGrid, landscape: &Landscape, sigma: f64) -> Result<GibbsResult> {
    let mut mu = SkillDensity::uniform(grid);
    let mut pi = landscape.values(&mu);
    let mut l1 = f64::INFINITY;
    for it in 1..=10_000 {
        let g = gibbs_fixed(grid, &pi, sigma)?;
        l1 = g.l1_distance(&mu);
        mu = g;
        if l1 < 1e-10 {
            return Ok(GibbsResult { density: mu, iterations: it, converged: true, l1_change: l1 });
        }
        let fresh = landscape.values(&mu);
        for (old, new) in pi.iter_mut().zip(fresh) {
            *old = (1.0 - GIBBS_DAMPING) * *old + GIBBS_DAMPING * new;
        }
    }
    Ok(GibbsResult { density: mu, iterations: 10_000, converged: false, l1_change: l1 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlowDiagnostics {
    pub time: f64,
    pub free_energy: f64,
    pub dissipation: f64,
    pub mass_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evolution {
    pub diagnostics: Vec<FlowDiagnostics>,
    pub snapshots: Vec<(f64, SkillDensity)>,
    pub last: SkillDensity,
    pub steps: usize,
    pub clipped: f64,
    pub stopped_early: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    pub t_end: f64,
    /// Record diagnostics every this many steps.
    pub record_every: usize,
    /// Fraction of the stability bound used as the step.
    pub safety: f64,
    /// Stop once the per-step L1 change divided by `dt` drops below this.
    pub stop_rate: f64,
    /// Keep full density snapshots at recorded steps.
    pub keep_snapshots: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions { t_end: 1.0, record_every: 100, safety: 0.9, stop_rate: 1e-9, keep_snapshots: false }
    }
}

pub fn evolve(initial: &SkillDensity, landscape: &Landscape, sigma: f64, opts: EvolveOptions) -> Result<Evolution> {
    if landscape.len() != initial.grid.n_cells {
        return Err(Error::invalid("landscape", "length must equal n_cells"));
    }
    let mut mu = initial.clone();
    let mut t = 0.0;
    let mut steps = 0usize;
    let mut clipped = 0.0;
    let mut stopped_early = false;
    let record = |mu: &SkillDensity, t: f64, prev: Option<&FlowDiagnostics>| {
        let f = free_energy_with(mu, &landscape.values(mu), sigma);
        let dissipation = match prev {
            Some(p) if t > p.time => -(f - p.free_energy) / (t - p.time),
            _ => 0.0,
        };
        FlowDiagnostics { time: t, free_energy: f, dissipation, mass_error: (mu.total() - 1.0).abs() }
    };
    let mut diagnostics = vec![record(&mu, t, None)];
    let mut snapshots = Vec::new();
    if opts.keep_snapshots {
        snapshots.push((t, mu.clone()));
    }
    while t < opts.t_end {
        let pi = landscape.values(&mu);
        let dt = (opts.safety * stable_dt(&pi, &mu.grid, sigma)).min(opts.t_end - t);
        if !(dt > 0.0) || !dt.is_finite() {
            // flat landscape with no diffusion: nothing moves
            break;
        }
        let before = mu.mass.clone();
        clipped += fp_step_with(&mut mu, &pi, dt, sigma)?.clipped;
        t += dt;
        steps += 1;
        let change: f64 = before.iter().zip(&mu.mass).map(|(a, b)| (a - b).abs()).sum();
        let done = change / dt < opts.stop_rate;
        if steps.is_multiple_of(opts.record_every.max(1)) || done || t >= opts.t_end {
            let d = record(&mu, t, diagnostics.last());
            diagnostics.push(d);
            if opts.keep_snapshots {
                snapshots.push((t, mu.clone()));
            }
        }
        if done {
            stopped_early = true;
            break;
        }
    }
    Ok(Evolution { diagnostics, snapshots, last: mu, steps, clipped, stopped_early })
}

/// Default setup: domain [0, 2], 256 cells, Gaussian incumbents at 0.7 +- 0.2.
pub fn default_initial(n_cells: usize) -> Result<SkillDensity> {
    SkillDensity::truncated_gaussian(SkillGrid::new(0.0, 2.0, n_cells)?, 0.7, 0.2)
}
