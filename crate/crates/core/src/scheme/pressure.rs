//! Pressure from the total fields and its four-part split.

use num_complex::Complex64;
use serde::Serialize;

use super::{MhdMap, MhdState, PathPair, SchemeParams, Trajectory, Window};
use crate::caloric::{stokes_solve, time_derivative, ForcedTrajectory};
use crate::error::Result;
use crate::spectral::field::ensure_same;
use crate::spectral::ops::{accumulate_transport, gradient_physical, to_spectral_dealiased};
use crate::spectral::{divergence, gradient, laplacian, mixed_norm, outer, tensor_divergence, Grid, ScalarField, VectorField};

/// `(l, s)` of the maximal-regularity bound audited for each part.
pub const STOKES_PAIRS: [(f64, f64); 4] = [(1.5, 9.0 / 8.0), (1.5, 4.0 / 3.0), (1.5, 6.0 / 5.0), (1.5, 1.5)];

/// `Π̂ = -k_i k_j N̂_ij / |k|²` with `N = v⊗v - H⊗H`.
pub fn pressure_from_totals(v: &VectorField, h: &VectorField) -> Result<ScalarField> {
    ensure_same(v.grid(), h.grid())?;
    let grid = v.grid();
    let (nv, nh) = (outer(v, v)?, outer(h, h)?);
    let coeffs = (0..grid.len())
        .map(|idx| {
            let k2 = grid.k2(idx);
            if k2 == 0.0 {
                return Complex64::default();
            }
            let k = grid.k_vec(idx);
            let mut acc = Complex64::default();
            for i in 0..3 {
                for j in 0..3 {
                    acc += k[i] * k[j] * (nv.component(i, j)[idx] - nh.component(i, j)[idx]);
                }
            }
            -acc / k2
        })
        .collect();
    Ok(ScalarField::from_coeffs(grid, coeffs))
}

/// `‖ΔΠ + ∂_i∂_j N_ij‖ / ‖∂_i∂_j N_ij‖` for the pressure of `(v, h)`.
pub fn poisson_residual(v: &VectorField, h: &VectorField) -> Result<f64> {
    let p = pressure_from_totals(v, h)?;
    let div_n = &tensor_divergence(&outer(v, v)?) - &tensor_divergence(&outer(h, h)?);
    let rhs = divergence(&div_n).scaled(-1.0);
    let defect = divergence(&gradient(&p)).sub(&rhs)?.l2_norm();
    let scale = rhs.l2_norm();
    Ok(if scale > 0.0 { defect / scale } else { defect })
}

/// Pressure of the total fields `v1 + v2`, `H1 + H2` at one node.
pub fn recover_pressure(state: &MhdState, v1: &VectorField, h1: &VectorField) -> Result<ScalarField> {
    ensure_same(state.v2.grid(), v1.grid())?;
    pressure_from_totals(&v1.try_add(&state.v2)?, &h1.try_add(&state.h2)?)
}

/// `Π̂ = -i k·f̂ / |k|²`, the potential of `(I - ℙ) f`.
fn potential(f: &VectorField) -> ScalarField {
    let grid = f.grid();
    let coeffs = (0..grid.len())
        .map(|idx| {
            let k2 = grid.k2(idx);
            if k2 == 0.0 {
                return Complex64::default();
            }
            let k = grid.k_deriv(idx);
            let dot = k[0] * f.component(0)[idx] + k[1] * f.component(1)[idx] + k[2] * f.component(2)[idx];
            Complex64::new(0.0, -1.0) * dot / k2
        })
        .collect();
    ScalarField::from_coeffs(grid, coeffs)
}

/// Dealiased `Σ sign · a·∇w`.
fn transport(grid: &Grid, terms: &[(f64, &[Vec<f64>; 3], &[[Vec<f64>; 3]; 3])]) -> VectorField {
    let mut out = [vec![0.0; grid.len()], vec![0.0; grid.len()], vec![0.0; grid.len()]];
    for &(sign, a, g) in terms {
        accumulate_transport(&mut out, sign, a, g);
    }
    to_spectral_dealiased(grid, out)
}

/// The forcings `H2·∇H2 - v2·∇v2`, `H2·∇H1 - v2·∇v1`, `H1·∇H2 - v1·∇v2`, `H1·∇H1 - v1·∇v1`.
fn part_forcings(v1: &VectorField, h1: &VectorField, v2: &VectorField, h2: &VectorField) -> [VectorField; 4] {
    let grid = v1.grid();
    let (pv1, ph1, pv2, ph2) = (v1.to_physical(), h1.to_physical(), v2.to_physical(), h2.to_physical());
    let (gv1, gh1, gv2, gh2) = (gradient_physical(v1), gradient_physical(h1), gradient_physical(v2), gradient_physical(h2));
    [
        transport(grid, &[(1.0, &ph2, &gh2), (-1.0, &pv2, &gv2)]),
        transport(grid, &[(1.0, &ph2, &gh1), (-1.0, &pv2, &gv1)]),
        transport(grid, &[(1.0, &ph1, &gh2), (-1.0, &pv1, &gv2)]),
        transport(grid, &[(1.0, &ph1, &gh1), (-1.0, &pv1, &gv1)]),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StokesRow {
    pub window: usize,
    pub part: usize,
    pub l: f64,
    pub s: f64,
    pub ratio: f64,
}

/// Pressure parts of one window, per node.
#[derive(Debug, Clone)]
pub struct WindowPressure {
    pub parts: [Vec<ScalarField>; 4],
    pub total: Vec<ScalarField>,
}

#[derive(Debug, Clone)]
pub struct PressureDecomposition {
    pub windows: Vec<WindowPressure>,
    pub stokes: Vec<StokesRow>,
    /// `‖∇Π - Σ∇Πⁱ‖ / ‖∇Π‖` in `L^{3/2}L^{9/8}`, worst window
    pub identity_defect: f64,
}

/// Splits the pressure of every window into the four forced Stokes parts.
pub fn pressure_decompose(traj: &Trajectory) -> Result<PressureDecomposition> {
    let mut windows = Vec::with_capacity(traj.windows.len());
    let mut stokes = Vec::new();
    let mut identity_defect = 0.0f64;
    for (w, win) in traj.windows.iter().enumerate() {
        let nodes = win.steps() + 1;
        let per_node = traj.params.execution.map_range(nodes, |m| {
            let f = part_forcings(&win.cal.v1()[m], &win.cal.h1()[m], &win.v2[m], &win.h2[m]);
            let total = pressure_from_totals(&win.total_v(m), &win.total_h(m)).expect("same grid");
            (f, total)
        });
        let mut forcings: [Vec<VectorField>; 4] = Default::default();
        let mut total = Vec::with_capacity(nodes);
        for (f, p) in per_node {
            for (slot, fi) in forcings.iter_mut().zip(f) {
                slot.push(fi);
            }
            total.push(p);
        }
        let time = win.cal.time();
        for (i, f) in forcings.iter().enumerate() {
            let (l, s) = STOKES_PAIRS[i];
            let sol = stokes_solve(&ForcedTrajectory::new(time, f.clone())?, l, s)?;
            stokes.push(StokesRow { window: w, part: i + 1, l, s, ratio: sol.regularity_ratio });
        }
        let parts: [Vec<ScalarField>; 4] = std::array::from_fn(|i| forcings[i].iter().map(potential).collect());
        let grad_total: Vec<VectorField> = total.iter().map(gradient).collect();
        let defect: Vec<VectorField> = (0..nodes)
            .map(|m| {
                let mut d = grad_total[m].clone();
                for part in &parts {
                    d.axpy(-1.0, &gradient(&part[m]));
                }
                d
            })
            .collect();
        let scale = mixed_norm(&grad_total, time.dt, 1.5, 9.0 / 8.0)?;
        let err = mixed_norm(&defect, time.dt, 1.5, 9.0 / 8.0)?;
        if scale > 0.0 {
            identity_defect = identity_defect.max(err / scale);
        } else {
            identity_defect = identity_defect.max(err);
        }
        windows.push(WindowPressure { parts, total });
    }
    Ok(PressureDecomposition { windows, stokes, identity_defect })
}

/// Node residual of the discrete momentum and induction equations,
/// `‖∂ₜu - Δu - g(u)‖_{L²}` with `g` the projected forcing of the mollified
/// system, at the interior nodes of a window; the first entry of each pair is
/// the time, the second the residual relative to `max_m ‖Δu‖ + ‖g‖`.
pub fn momentum_residual(win: &Window, params: &SchemeParams) -> Result<Vec<(f64, f64)>> {
    let dt = win.dt();
    let map = MhdMap::new(&win.cal, params);
    let u = PathPair { v: win.v2.clone(), h: win.h2.clone() };
    let (dv, dh) = (time_derivative(&win.v2, dt)?, time_derivative(&win.h2, dt)?);
    let nodes = win.steps() + 1;
    let rows: Vec<(f64, f64)> = params.execution.map_range(nodes, |m| {
        let (gv, gh) = map.node_forcing(&u, m, true);
        let (lv, lh) = (laplacian(&win.v2[m]), laplacian(&win.h2[m]));
        let rv = &(&dv[m] - &lv) - &gv;
        let rh = &(&dh[m] - &lh) - &gh;
        let scale = (lv.l2_norm_sqr() + lh.l2_norm_sqr()).sqrt() + (gv.l2_norm_sqr() + gh.l2_norm_sqr()).sqrt();
        ((rv.l2_norm_sqr() + rh.l2_norm_sqr()).sqrt(), scale)
    });
    let scale = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok((1..nodes.saturating_sub(1))
        .map(|m| ((win.start_node + m) as f64 * dt, if scale > 0.0 { rows[m].0 / scale } else { rows[m].0 }))
        .collect())
}
