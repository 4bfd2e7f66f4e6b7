//! Mean-oscillation bounds for the pressure parts on sub-boxes.
//!
//! For part `i` with exponents `(a, s)` the audited inequality is
//!
//! ```text
//! ∫_0^T ∫_Q |Π - [Π]_Q|^{3/2} ≤ C R^a ∫_0^T (∫_Q |∇Π|^s)^{3/(2s)}
//! ```
//!
//! over axis-aligned boxes `Q` of side `2R` tiling the periodic cube. Both
//! sides scale like `R^3` under dilation, so the ratio is scale-free.

use serde::Serialize;

use crate::calibration::Calibration;
use crate::error::{Error, Result};
use crate::scheme::PressureDecomposition;
use crate::spectral::norms::trapezoid;
use crate::spectral::ops::gradient;
use crate::spectral::{Grid, ScalarField};

/// `(R power, gradient exponent s)` per pressure part; the outer power is `3/(2s)`.
pub const PART_EXPONENTS: [(f64, f64); 4] = [(0.5, 9.0 / 8.0), (9.0 / 8.0, 4.0 / 3.0), (0.75, 6.0 / 5.0), (1.5, 1.5)];

pub fn outer_power(s: f64) -> f64 {
    1.5 / s
}

/// Point indices of each box of side `2R`; `L / (2R)` and `n 2R / L` must be whole.
pub fn sub_boxes(grid: &Grid, r: f64) -> Result<Vec<Vec<usize>>> {
    let l = grid.box_length();
    if !(r > 0.0) || r > 0.5 * l * (1.0 + 1e-12) {
        return Err(Error::InvalidArgument(format!("sub-box half-width {r} must lie in (0, L/2]")));
    }
    let per_axis = l / (2.0 * r);
    let side = grid.n() as f64 / per_axis;
    let (pa, sd) = (per_axis.round(), side.round());
    if (pa - per_axis).abs() > 1e-9 || (sd - side).abs() > 1e-9 || sd < 1.0 {
        return Err(Error::InvalidArgument(format!("boxes of side {} do not tile the grid", 2.0 * r)));
    }
    let (pa, sd) = (pa as usize, sd as usize);
    let mut out = Vec::with_capacity(pa * pa * pa);
    for bx in 0..pa {
        for by in 0..pa {
            for bz in 0..pa {
                let mut pts = Vec::with_capacity(sd * sd * sd);
                for i in 0..sd {
                    for j in 0..sd {
                        for k in 0..sd {
                            pts.push(grid.index(bx * sd + i, by * sd + j, bz * sd + k));
                        }
                    }
                }
                out.push(pts);
            }
        }
    }
    Ok(out)
}

/// Spatial sides for one field at one time: `(∫_Q |u - ū|^{3/2}, (∫_Q |∇u|^s)^{3/(2s)})` per box.
pub(crate) fn box_terms(u: &ScalarField, boxes: &[Vec<usize>], s: f64) -> Vec<(f64, f64)> {
    let grid = u.grid();
    let cell = grid.cell_volume();
    let vals = u.to_physical();
    let g = gradient(u).to_physical();
    boxes
        .iter()
        .map(|pts| {
            let mean = pts.iter().map(|&q| vals[q]).sum::<f64>() / pts.len() as f64;
            let lhs = cell * pts.iter().map(|&q| (vals[q] - mean).abs().powf(1.5)).sum::<f64>();
            let grad = cell
                * pts
                    .iter()
                    .map(|&q| (g[0][q] * g[0][q] + g[1][q] * g[1][q] + g[2][q] * g[2][q]).sqrt().powf(s))
                    .sum::<f64>();
            (lhs, grad.powf(outer_power(s)))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OscillationRow {
    pub part: usize,
    pub r: f64,
    pub box_index: usize,
    pub lhs: f64,
    /// right side without the constant, `R^a ∫ (∫_Q |∇Π|^s)^{3/(2s)}`
    pub rhs: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OscillationReport {
    pub rows: Vec<OscillationRow>,
    /// worst ratio per part over boxes and radii
    pub max_ratio: [f64; 4],
    pub thresholds: [f64; 4],
    pub pass: bool,
}

/// Audits the four pressure parts (each a per-node series) at each radius.
pub fn oscillation_audit(parts: &[Vec<ScalarField>; 4], dt: f64, radii: &[f64], thresholds: [f64; 4]) -> Result<OscillationReport> {
    let grid = parts[0].first().ok_or(Error::EmptyTrajectory)?.grid().clone();
    let mut rows = Vec::new();
    let mut max_ratio = [0.0f64; 4];
    for &r in radii {
        let boxes = sub_boxes(&grid, r)?;
        for (i, series) in parts.iter().enumerate() {
            let (a, s) = PART_EXPONENTS[i];
            let per_node: Vec<Vec<(f64, f64)>> = series.iter().map(|p| box_terms(p, &boxes, s)).collect();
            for b in 0..boxes.len() {
                let lhs = trapezoid(&per_node.iter().map(|t| t[b].0).collect::<Vec<_>>(), dt);
                let rhs = r.powf(a) * trapezoid(&per_node.iter().map(|t| t[b].1).collect::<Vec<_>>(), dt);
                let ratio = if rhs > 0.0 { lhs / rhs } else { 0.0 };
                max_ratio[i] = max_ratio[i].max(ratio);
                rows.push(OscillationRow { part: i + 1, r, box_index: b, lhs, rhs, ratio });
            }
        }
    }
    let pass = max_ratio.iter().zip(&thresholds).all(|(m, t)| m.is_finite() && m <= t);
    Ok(OscillationReport { rows, max_ratio, thresholds, pass })
}

/// Runs [`oscillation_audit`] on every window of a decomposition against the
/// fitted constants of `cal`; rows are tagged by window through `box_index`
/// order, the verdict is the conjunction.
pub fn pressure_oscillation_audit(decomp: &PressureDecomposition, dt: f64, cal: &Calibration) -> Result<Vec<OscillationReport>> {
    let first = decomp.windows.first().ok_or(Error::EmptyTrajectory)?;
    let grid = first.total.first().ok_or(Error::EmptyTrajectory)?.grid().clone();
    if !cal.matches(&grid) {
        return Err(Error::InvalidArgument("calibration belongs to another grid".into()));
    }
    let radii = default_radii(&grid);
    decomp.windows.iter().map(|w| oscillation_audit(&w.parts, dt, &radii, cal.oscillation)).collect()
}

/// The three audited radii `L/8, L/4, L/2`.
pub fn default_radii(grid: &Grid) -> Vec<f64> {
    let l = grid.box_length();
    vec![l / 8.0, l / 4.0, l / 2.0]
}
