//! Crank–Nicolson solver for the reduced pricing equation
//! `u_t + ½σ_x²(t;T)x²u_xx = 0` on `x > B` with a Dirichlet condition at the
//! barrier.
//!
//! The equation is solved in `y = ln x`, where it reads
//! `u_t + ½σ_x²(u_yy − u_y) = 0`. Each calendar step is advanced by its exact
//! variance increment `∫σ_x² du`, so the time dependence of the coefficient
//! introduces no extra discretisation error.

use serde::{Deserialize, Serialize};

use crate::error::{PricingError, Result};
use crate::model::{cum_variance, ModelParams};

/// Mesh ratio `Δvariance/h²` above which a grid is rejected.
pub const MAX_MESH_RATIO: f64 = 500.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    /// Number of space intervals in `ln x`.
    pub n_space: usize,
    /// Number of calendar time steps.
    pub n_time: usize,
    /// Grid spans `[ln B, ln B + width_sd·√I_total]`.
    pub width_sd: f64,
    /// Replace the first Crank–Nicolson step by two half-sized implicit steps.
    pub rannacher: bool,
    /// Place this `x` exactly halfway between two nodes (payoff discontinuity).
    pub align_x: Option<f64>,
}

impl GridConfig {
    pub fn new(n_space: usize, n_time: usize) -> Self {
        Self { n_space, n_time, width_sd: 8.0, rannacher: true, align_x: None }
    }

    pub fn aligned_at(mut self, x: f64) -> Self {
        self.align_x = Some(x);
        self
    }
}

impl Default for GridConfig {
    fn default() -> Self {
        Self::new(800, 800)
    }
}

/// Value surface `u(x, t)` on a uniform `ln x` grid.
#[derive(Debug, Clone)]
pub struct GridSolution {
    pub log_x_nodes: Vec<f64>,
    /// Ascending calendar times; `values[k]` is the solution at `times[k]`.
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl GridSolution {
    fn spacing(&self) -> f64 {
        self.log_x_nodes[1] - self.log_x_nodes[0]
    }

    /// Four-point Lagrange interpolation in `ln x` of one time level.
    fn interpolate_level(&self, level: &[f64], y: f64) -> f64 {
        let h = self.spacing();
        let n = self.log_x_nodes.len();
        let pos = (y - self.log_x_nodes[0]) / h;
        let i = (pos.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
        let mut acc = 0.0;
        for j in 0..4 {
            let mut basis = 1.0;
            for m in 0..4 {
                if m != j {
                    basis *= (pos - (i + m) as f64) / (j as f64 - m as f64);
                }
            }
            acc += basis * level[i + j];
        }
        acc
    }

    /// Solution at `(x, t)`: cubic in `ln x`, linear between time levels.
    pub fn interpolate(&self, x: f64, t: f64) -> Result<f64> {
        let y = x.ln();
        let (y_lo, y_hi) = (self.log_x_nodes[0], *self.log_x_nodes.last().unwrap());
        let slack = 1e-12 * (1.0 + y_hi.abs());
        if !(y >= y_lo - slack && y <= y_hi + slack) {
            return Err(PricingError::DomainError(format!("x = {x} outside the grid")));
        }
        let (t_lo, t_hi) = (self.times[0], *self.times.last().unwrap());
        if !(t >= t_lo && t <= t_hi) {
            return Err(PricingError::DomainError(format!("t = {t} outside [{t_lo}, {t_hi}]")));
        }
        let k = self.times.partition_point(|&s| s <= t).clamp(1, self.times.len() - 1) - 1;
        let (s0, s1) = (self.times[k], self.times[k + 1]);
        let u0 = self.interpolate_level(&self.values[k], y);
        if t == s0 {
            return Ok(u0);
        }
        let u1 = self.interpolate_level(&self.values[k + 1], y);
        let w = (t - s0) / (s1 - s0);
        Ok(u0 * (1.0 - w) + u1 * w)
    }
}

/// Solves backward from `t1` to `t0` with `u(x, t1) = terminal_payoff(x)`,
/// `u(B, t) = boundary_at_b(t)` and the far-field value pinned to the payoff
/// at the top of the grid.
pub fn cn_solve<P, Bd>(
    terminal_payoff: P,
    boundary_at_b: Bd,
    t0: f64,
    t1: f64,
    bond_t: f64,
    params: &ModelParams<f64>,
    grid: &GridConfig,
) -> Result<GridSolution>
where
    P: Fn(f64) -> f64,
    Bd: Fn(f64) -> f64,
{
    params.validate()?;
    if !(t0 < t1 && t1 <= bond_t) {
        return Err(PricingError::InvalidTenor { start: t0, end: t1 });
    }
    if grid.n_space < 8 || grid.n_time < 2 || !(grid.width_sd > 0.0) {
        return Err(PricingError::ResolutionError(format!(
            "need n_space ≥ 8, n_time ≥ 2 and a positive width (got {}, {}, {})",
            grid.n_space, grid.n_time, grid.width_sd
        )));
    }
    let total = cum_variance(t0, t1, bond_t, params)?;
    if total <= 0.0 {
        return Err(PricingError::DegenerateVariance { variance: total });
    }
    let y_b = params.barrier_b.ln();
    let span = grid.width_sd * total.sqrt();
    let mut h = span / grid.n_space as f64;
    let mut n_space = grid.n_space;
    if let Some(x_align) = grid.align_x {
        let offset = x_align.ln() - y_b;
        if offset > 0.0 && offset < span {
            let cells = (offset / h - 0.5).round().max(0.0);
            h = offset / (cells + 0.5);
            n_space = (span / h).ceil() as usize;
        }
    }
    let nodes: Vec<f64> = (0..=n_space).map(|j| y_b + j as f64 * h).collect();

    let dt = (t1 - t0) / grid.n_time as f64;
    let times: Vec<f64> = (0..=grid.n_time)
        .map(|k| if k == grid.n_time { t1 } else { t0 + k as f64 * dt })
        .collect();

    let mut max_ratio = 0.0_f64;
    let increments: Vec<f64> = times
        .windows(2)
        .map(|w| {
            let v = cum_variance(w[0], w[1], bond_t, params)?;
            max_ratio = max_ratio.max(v / (h * h));
            Ok(v)
        })
        .collect::<Result<_>>()?;
    if max_ratio > MAX_MESH_RATIO {
        return Err(PricingError::ResolutionError(format!(
            "mesh ratio {max_ratio:.1} exceeds {MAX_MESH_RATIO}; refine time steps"
        )));
    }

    let top = terminal_payoff(nodes[n_space].exp());
    let mut u: Vec<f64> = nodes.iter().map(|&y| terminal_payoff(y.exp())).collect();
    u[0] = boundary_at_b(t1);
    u[n_space] = top;

    // L u_j = lm·u_{j−1} + lc·u_j + lp·u_{j+1} for ½(u_yy − u_y).
    let lm = 0.5 * (1.0 / (h * h) + 0.5 / h);
    let lc = -1.0 / (h * h);
    let lp = 0.5 * (1.0 / (h * h) - 0.5 / h);
    let stencil = Stencil { lm, lc, lp };

    let mut values = vec![Vec::new(); times.len()];
    values[grid.n_time] = u.clone();
    let mut work = Workspace::new(n_space + 1);
    for k in (0..grid.n_time).rev() {
        let lower = boundary_at_b(times[k]);
        if k == grid.n_time - 1 && grid.rannacher {
            let mid = 0.5 * (times[k] + times[k + 1]);
            let v_late = cum_variance(mid, times[k + 1], bond_t, params)?;
            let v_early = cum_variance(times[k], mid, bond_t, params)?;
            stencil.step(&mut u, v_late, 1.0, boundary_at_b(mid), top, &mut work);
            stencil.step(&mut u, v_early, 1.0, lower, top, &mut work);
        } else {
            stencil.step(&mut u, increments[k], 0.5, lower, top, &mut work);
        }
        values[k] = u.clone();
    }

    Ok(GridSolution { log_x_nodes: nodes, times, values })
}

struct Stencil {
    lm: f64,
    lc: f64,
    lp: f64,
}

struct Workspace {
    rhs: Vec<f64>,
    c_prime: Vec<f64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Self { rhs: vec![0.0; n], c_prime: vec![0.0; n] }
    }
}

impl Stencil {
    /// One theta-scheme step over variance `v`: `(I − θvL)u⁻ = (I + (1−θ)vL)u⁺`.
    fn step(&self, u: &mut [f64], v: f64, implicitness: f64, lower: f64, upper: f64, ws: &mut Workspace) {
        let n = u.len();
        let explicit = (1.0 - implicitness) * v;
        let imp = implicitness * v;
        ws.rhs[0] = lower;
        ws.rhs[n - 1] = upper;
        for j in 1..n - 1 {
            ws.rhs[j] = u[j] + explicit * (self.lm * u[j - 1] + self.lc * u[j] + self.lp * u[j + 1]);
        }
        // Thomas algorithm; the boundary rows are identity rows.
        let a = -imp * self.lm;
        let b = 1.0 - imp * self.lc;
        let c = -imp * self.lp;
        ws.c_prime[0] = 0.0;
        let mut prev_d = ws.rhs[0];
        u[0] = prev_d;
        for j in 1..n - 1 {
            let denom = b - a * ws.c_prime[j - 1];
            ws.c_prime[j] = c / denom;
            prev_d = (ws.rhs[j] - a * prev_d) / denom;
            u[j] = prev_d;
        }
        u[n - 1] = ws.rhs[n - 1];
        for j in (1..n - 1).rev() {
            u[j] -= ws.c_prime[j] * u[j + 1];
        }
    }
}
