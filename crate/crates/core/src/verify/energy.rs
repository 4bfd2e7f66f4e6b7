//! Global and local energy balances of the perturbation.
//!
//! With `E = ½(‖v2‖² + ‖H2‖²)` and `Diss = ‖∇v2‖² + ‖∇H2‖²` the mollified
//! system satisfies `E' + Diss = Cross` exactly, where
//!
//! ```text
//! Cross = ∫ v1⊗v:∇v2 - H1⊗H:∇v2 - v1⊗H:∇H2 + H1⊗v:∇H2,   (a⊗b):∇c = a_i b_j ∂_j c_i
//! ```
//!
//! with the unmollified totals `v = v1 + v2`, `H = H1 + H2`: the mollified
//! transport terms integrate to zero because `η*v2` and `η*H2` are
//! divergence-free. The audits integrate both sides with the trapezoid rule
//! on each window and compare.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scheme::{pressure_from_totals, Trajectory, Window};
use crate::spectral::norms::{cumulative_trapezoid, sobolev_seminorm, Sobolev};
use crate::spectral::ops::gradient_physical;
use crate::spectral::{Grid, VectorField};

const FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyKind {
    Global,
    Local,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyRow {
    pub window: usize,
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyReport {
    pub kind: EnergyKind,
    pub test_function: Option<TestFunction>,
    pub rows: Vec<EnergyRow>,
    /// per-window tolerance on `residual ≥ -tol`
    pub tolerances: Vec<f64>,
    pub min_residual: f64,
    pub pass: bool,
}

/// Node series of the global balance of one window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergySeries {
    pub t: Vec<f64>,
    pub e_v2: Vec<f64>,
    pub e_h2: Vec<f64>,
    pub diss_v2: Vec<f64>,
    pub diss_h2: Vec<f64>,
    pub cross: Vec<f64>,
}

impl EnergySeries {
    fn energy(&self, m: usize) -> f64 {
        self.e_v2[m] + self.e_h2[m]
    }

    fn rate(&self, m: usize) -> f64 {
        self.cross[m] - self.diss_v2[m] - self.diss_h2[m]
    }

    /// Largest second difference of `Cross - Diss`, divided by `dt²`.
    pub fn rate_curvature(&self, dt: f64) -> f64 {
        let f: Vec<f64> = (0..self.t.len()).map(|m| self.rate(m)).collect();
        f.windows(3).map(|w| (w[2] - 2.0 * w[1] + w[0]).abs() / (dt * dt)).fold(0.0, f64::max)
    }

    /// `[E(t_{m+1}) - E(t_m)]/dt + avg Diss - avg Cross` per step.
    pub fn step_residuals(&self, dt: f64) -> Vec<f64> {
        (0..self.t.len().saturating_sub(1))
            .map(|m| (self.energy(m + 1) - self.energy(m)) / dt - 0.5 * (self.rate(m) + self.rate(m + 1)))
            .collect()
    }

    /// `10 (dt² max|F''| / 12 + floor)`: ten times the trapezoid remainder bound.
    pub fn step_tolerance(&self, dt: f64) -> f64 {
        10.0 * (dt * dt * self.rate_curvature(dt) / 12.0 + FLOOR)
    }
}

fn dot_grad(a: &[Vec<f64>; 3], b: &[Vec<f64>; 3], g: &[[Vec<f64>; 3]; 3], q: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            s += a[i][q] * b[j][q] * g[i][j][q];
        }
    }
    s
}

/// Cross terms at one node; the integrand has degree at most `3K < n`, so the
/// grid sum is exact.
fn cross_term(grid: &Grid, v1: &VectorField, h1: &VectorField, v2: &VectorField, h2: &VectorField) -> f64 {
    let (pv1, ph1) = (v1.to_physical(), h1.to_physical());
    let v = (v1 + v2).to_physical();
    let h = (h1 + h2).to_physical();
    let (gv2, gh2) = (gradient_physical(v2), gradient_physical(h2));
    let sum: f64 = (0..grid.len())
        .map(|q| dot_grad(&pv1, &v, &gv2, q) - dot_grad(&ph1, &h, &gv2, q) - dot_grad(&pv1, &h, &gh2, q) + dot_grad(&ph1, &v, &gh2, q))
        .sum();
    sum * grid.cell_volume()
}

/// Energy, dissipation and cross terms at every node of `win`.
pub fn energy_series(win: &Window, traj: &Trajectory) -> EnergySeries {
    let grid = win.cal.grid();
    let dt = win.dt();
    let nodes = win.steps() + 1;
    let rows = traj.params.execution.map_range(nodes, |m| {
        let (v2, h2) = (&win.v2[m], &win.h2[m]);
        let cross = if v2.is_zero() && h2.is_zero() {
            0.0
        } else {
            cross_term(grid, &win.cal.v1()[m], &win.cal.h1()[m], v2, h2)
        };
        (
            0.5 * v2.l2_norm_sqr(),
            0.5 * h2.l2_norm_sqr(),
            sobolev_seminorm(v2, Sobolev::Dot1).powi(2),
            sobolev_seminorm(h2, Sobolev::Dot1).powi(2),
            cross,
        )
    });
    EnergySeries {
        t: (0..nodes).map(|m| (win.start_node + m) as f64 * dt).collect(),
        e_v2: rows.iter().map(|r| r.0).collect(),
        e_h2: rows.iter().map(|r| r.1).collect(),
        diss_v2: rows.iter().map(|r| r.2).collect(),
        diss_h2: rows.iter().map(|r| r.3).collect(),
        cross: rows.iter().map(|r| r.4).collect(),
    }
}

/// `LHS(t) = E(t) + ∫Diss`, `RHS(t) = ∫Cross` per window; passes iff
/// `RHS - LHS ≥ -10 (T dt² max|F''| / 12 + 1e-12)` on every window.
pub fn global_energy_audit(traj: &Trajectory) -> (EnergyReport, Vec<EnergySeries>) {
    let mut rows = Vec::new();
    let mut tolerances = Vec::new();
    let mut series = Vec::new();
    for (w, win) in traj.windows.iter().enumerate() {
        let s = energy_series(win, traj);
        let dt = win.dt();
        let diss: Vec<f64> = s.diss_v2.iter().zip(&s.diss_h2).map(|(a, b)| a + b).collect();
        let int_diss = cumulative_trapezoid(&diss, dt);
        let int_cross = cumulative_trapezoid(&s.cross, dt);
        let horizon = win.steps() as f64 * dt;
        tolerances.push(10.0 * (horizon * dt * dt * s.rate_curvature(dt) / 12.0 + FLOOR));
        for m in 0..s.t.len() {
            let lhs = s.energy(m) + int_diss[m];
            let rhs = int_cross[m];
            rows.push(EnergyRow { window: w, t: s.t[m], lhs, rhs, residual: rhs - lhs });
        }
        series.push(s);
    }
    finish(EnergyKind::Global, None, rows, tolerances, series)
}

fn finish(
    kind: EnergyKind,
    test_function: Option<TestFunction>,
    rows: Vec<EnergyRow>,
    tolerances: Vec<f64>,
    series: Vec<EnergySeries>,
) -> (EnergyReport, Vec<EnergySeries>) {
    let min_residual = rows.iter().map(|r| r.residual).fold(f64::INFINITY, f64::min);
    let pass = rows.iter().all(|r| r.residual.is_finite() && r.residual >= -tolerances[r.window]);
    (EnergyReport { kind, test_function, rows, tolerances, min_residual, pass }, series)
}

/// `(1 - s²)⁴` on `|s| < 1`, with first and second derivatives in `s`.
fn bump(s: f64) -> (f64, f64, f64) {
    if s.abs() >= 1.0 {
        return (0.0, 0.0, 0.0);
    }
    let w = 1.0 - s * s;
    (w.powi(4), -8.0 * s * w.powi(3), -8.0 * w.powi(3) + 48.0 * s * s * w * w)
}

/// `φ(x,t) = b((t - t_c)/t_r) Π_d b((x_d - c_d)/r)` with `b(s) = (1 - s²)⁴`,
/// using the periodic distance to the centre. An infinite `radius` drops the
/// spatial factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestFunction {
    pub center: [f64; 3],
    pub radius: f64,
    pub t_center: f64,
    pub t_radius: f64,
}

impl TestFunction {
    /// Centred in the box with radius `L/4`, supported on the middle three quarters of `[t0, t1]`.
    pub fn preset(grid: &Grid, t0: f64, t1: f64) -> Self {
        let l = grid.box_length();
        Self { center: [l / 2.0; 3], radius: l / 4.0, t_center: 0.5 * (t0 + t1), t_radius: 0.375 * (t1 - t0) }
    }

    fn offset(&self, grid: &Grid, x: f64, d: usize) -> f64 {
        let l = grid.box_length();
        let mut s = x - self.center[d];
        s -= l * (s / l).round();
        s / self.radius
    }

    /// Spatially constant: `φ(x,t) = b((t - t_c)/t_r)`.
    pub fn time_only(t_center: f64, t_radius: f64) -> Self {
        Self { center: [0.0; 3], radius: f64::INFINITY, t_center, t_radius }
    }

    /// `(φ, ∂tφ, ∇φ, Δφ)` sampled on the grid at time `t`.
    fn sample(&self, grid: &Grid, t: f64) -> (Vec<f64>, Vec<f64>, [Vec<f64>; 3], Vec<f64>) {
        let (bt, dbt, _) = bump((t - self.t_center) / self.t_radius);
        let dbt = dbt / self.t_radius;
        let len = grid.len();
        let (mut phi, mut dphi_t, mut lap) = (vec![0.0; len], vec![0.0; len], vec![0.0; len]);
        let mut grad = [vec![0.0; len], vec![0.0; len], vec![0.0; len]];
        if bt == 0.0 && dbt == 0.0 {
            return (phi, dphi_t, grad, lap);
        }
        let r = self.radius;
        for q in 0..len {
            let x = grid.point(q);
            let b: [(f64, f64, f64); 3] = std::array::from_fn(|d| bump(self.offset(grid, x[d], d)));
            let space = b[0].0 * b[1].0 * b[2].0;
            phi[q] = bt * space;
            dphi_t[q] = dbt * space;
            for d in 0..3 {
                let others: f64 = (0..3).filter(|&e| e != d).map(|e| b[e].0).product();
                grad[d][q] = bt * b[d].1 / r * others;
                lap[q] += bt * b[d].2 / (r * r) * others;
            }
        }
        (phi, dphi_t, grad, lap)
    }
}

/// The local balance with test function `phi`:
///
/// ```text
/// LHS(t) = ∫φ(|v2|²+|H2|²) + 2∫∫φ(|∇v2|²+|∇H2|²)
/// RHS(t) = ∫∫(|v2|²+|H2|²)(Δφ+∂tφ) + ∫∫(|v2|²+|H2|²+2Π) v2·∇φ - 2∫∫(v2·H2)(H2·∇φ)
///        + 2∫∫A_ij ∂_j(v2_i φ) + 2∫∫B_ij ∂_j(H2_i φ)
/// ```
///
/// with `A = v1⊗v2 + v2⊗v1 + v1⊗v1 - H1⊗H2 - H2⊗H1 - H1⊗H1`,
/// `B = H1⊗v2 + H2⊗v1 + H1⊗v1 - v1⊗H2 - v2⊗H1 - v1⊗H1` and `Π` the pressure
/// of the total fields. `φ` must vanish near both ends of one window.
pub fn local_energy_audit(traj: &Trajectory, phi: &TestFunction) -> Result<(EnergyReport, Vec<EnergySeries>)> {
    let dt = traj.dt();
    let (lo, hi) = (phi.t_center - phi.t_radius, phi.t_center + phi.t_radius);
    let w = traj
        .windows
        .iter()
        .position(|win| {
            let t0 = win.start_node as f64 * dt;
            let t1 = t0 + win.steps() as f64 * dt;
            lo > t0 && hi < t1
        })
        .ok_or_else(|| {
            Error::UnsupportedTestFunction(format!("time support [{lo}, {hi}] must lie strictly inside one window"))
        })?;
    let spatial_ok = phi.radius == f64::INFINITY || (phi.radius > 0.0 && phi.radius <= 0.5 * traj.grid().box_length());
    if !spatial_ok || !(phi.t_radius > 0.0) {
        return Err(Error::UnsupportedTestFunction("radius must lie in (0, L/2] or be infinite".into()));
    }
    let win = &traj.windows[w];
    let grid = win.cal.grid();
    let nodes = win.steps() + 1;
    let cell = grid.cell_volume();
    let per_node = traj.params.execution.map_range(nodes, |m| {
        let t = (win.start_node + m) as f64 * dt;
        let (p, pt, gp, lp) = phi.sample(grid, t);
        if p.iter().chain(&pt).all(|&x| x == 0.0) {
            return (0.0, 0.0, 0.0);
        }
        let (v1, h1) = (win.cal.v1()[m].to_physical(), win.cal.h1()[m].to_physical());
        let (v2, h2) = (win.v2[m].to_physical(), win.h2[m].to_physical());
        let (gv2, gh2) = (gradient_physical(&win.v2[m]), gradient_physical(&win.h2[m]));
        let pressure = pressure_from_totals(&win.total_v(m), &win.total_h(m)).expect("same grid").to_physical();
        let (mut s, mut d, mut c) = (0.0, 0.0, 0.0);
        for q in 0..grid.len() {
            let dot = |a: &[Vec<f64>; 3], b: &[Vec<f64>; 3]| a[0][q] * b[0][q] + a[1][q] * b[1][q] + a[2][q] * b[2][q];
            let e = dot(&v2, &v2) + dot(&h2, &h2);
            let grad2: f64 = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).map(|(i, j)| gv2[i][j][q].powi(2) + gh2[i][j][q].powi(2)).sum();
            s += p[q] * e;
            d += 2.0 * p[q] * grad2;
            let v2_gphi = v2[0][q] * gp[0][q] + v2[1][q] * gp[1][q] + v2[2][q] * gp[2][q];
            let h2_gphi = h2[0][q] * gp[0][q] + h2[1][q] * gp[1][q] + h2[2][q] * gp[2][q];
            let mut term = e * (lp[q] + pt[q]) + (e + 2.0 * pressure[q]) * v2_gphi - 2.0 * dot(&v2, &h2) * h2_gphi;
            for i in 0..3 {
                for j in 0..3 {
                    let a = v1[i][q] * v2[j][q] + v2[i][q] * v1[j][q] + v1[i][q] * v1[j][q]
                        - h1[i][q] * h2[j][q]
                        - h2[i][q] * h1[j][q]
                        - h1[i][q] * h1[j][q];
                    let b = h1[i][q] * v2[j][q] + h2[i][q] * v1[j][q] + h1[i][q] * v1[j][q]
                        - v1[i][q] * h2[j][q]
                        - v2[i][q] * h1[j][q]
                        - v1[i][q] * h1[j][q];
                    let dv = p[q] * gv2[i][j][q] + v2[i][q] * gp[j][q];
                    let dh = p[q] * gh2[i][j][q] + h2[i][q] * gp[j][q];
                    term += 2.0 * (a * dv + b * dh);
                }
            }
            c += term;
        }
        (s * cell, d * cell, c * cell)
    });
    let state: Vec<f64> = per_node.iter().map(|r| r.0).collect();
    let diss: Vec<f64> = per_node.iter().map(|r| r.1).collect();
    let flux: Vec<f64> = per_node.iter().map(|r| r.2).collect();
    let (int_d, int_c) = (cumulative_trapezoid(&diss, dt), cumulative_trapezoid(&flux, dt));
    let rate: Vec<f64> = flux.iter().zip(&diss).map(|(c, d)| c - d).collect();
    let curvature = rate.windows(3).map(|x| (x[2] - 2.0 * x[1] + x[0]).abs() / (dt * dt)).fold(0.0, f64::max);
    let horizon = win.steps() as f64 * dt;
    let mut tolerances = vec![0.0; traj.windows.len()];
    tolerances[w] = 10.0 * (horizon * dt * dt * curvature / 12.0 + FLOOR);
    let rows = (0..nodes)
        .map(|m| {
            let lhs = state[m] + int_d[m];
            let rhs = int_c[m];
            EnergyRow { window: w, t: (win.start_node + m) as f64 * dt, lhs, rhs, residual: rhs - lhs }
        })
        .collect();
    Ok(finish(EnergyKind::Local, Some(*phi), rows, tolerances, Vec::new()))
}
