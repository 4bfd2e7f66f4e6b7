//! Convergence of the mollified solutions as `ε → 0`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scheme::{solve_trajectory, SchemeParams, Trajectory};
use crate::spectral::norms::trapezoid;
use crate::spectral::VectorField;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub epsilon: f64,
    /// `‖(v_ε - v_{ε/2}, H_ε - H_{ε/2})‖_{L²L²}` of the total fields
    pub distance: f64,
    pub windows: usize,
    pub picard_iters: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub pass: bool,
}

/// `L²L²` distance between the total fields of two runs on the same nodes.
pub fn trajectory_distance(a: &Trajectory, b: &Trajectory) -> Result<f64> {
    if a.grid() != b.grid() {
        return Err(Error::GridMismatch);
    }
    if a.steps() != b.steps() || a.dt() != b.dt() {
        return Err(Error::NodeMismatch);
    }
    let sq = |x: VectorField, y: VectorField| x.try_sub(&y).map(|d| d.l2_norm_sqr());
    let per_node = a
        .params
        .execution
        .map_range(a.steps() + 1, |m| Ok(sq(a.total_v(m), b.total_v(m))? + sq(a.total_h(m), b.total_h(m))?))
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
    Ok(trapezoid(&per_node, a.dt()).sqrt())
}

/// Solves at every `ε` in `levels` and at `ε/2`, and reports
/// `d(ε) = ‖u_ε - u_{ε/2}‖`; passes iff `d` strictly decreases along `levels`
/// (given in decreasing order) or stays at zero.
pub fn epsilon_sweep(v0: &VectorField, h0: &VectorField, params: &SchemeParams, levels: &[f64]) -> Result<SweepReport> {
    if levels.is_empty() || levels.windows(2).any(|w| w[1] >= w[0]) || levels.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::InvalidArgument("ε levels must be positive and strictly decreasing".into()));
    }
    let mut eps: Vec<f64> = levels.to_vec();
    eps.extend(levels.iter().map(|e| e / 2.0));
    eps.sort_by(|a, b| b.total_cmp(a));
    eps.dedup();
    let runs = eps
        .iter()
        .map(|&e| solve_trajectory(v0, h0, &SchemeParams { epsilon: e, ..params.clone() }).map(|t| (e, t)))
        .collect::<Result<Vec<_>>>()?;
    let find = |e: f64| runs.iter().find(|(x, _)| *x == e).map(|(_, t)| t).expect("solved above");
    let rows = levels
        .iter()
        .map(|&e| {
            let (a, b) = (find(e), find(e / 2.0));
            Ok(SweepRow {
                epsilon: e,
                distance: trajectory_distance(a, b)?,
                windows: a.windows.len(),
                picard_iters: a.windows.iter().map(|w| w.certificate.iterations).sum(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    // zero data stays zero at every level
    let decreasing = |a: f64, b: f64| b < a || (a == 0.0 && b == 0.0);
    let pass = rows.windows(2).all(|w| decreasing(w[0].distance, w[1].distance)) && rows.iter().all(|r| r.distance.is_finite());
    Ok(SweepReport { rows, pass })
}
