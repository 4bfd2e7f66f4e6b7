//! Norm audits: caloric bounds, the a-priori growth proxy, the nonlinear
//! interpolation bound and a per-node norm ledger.

use serde::Serialize;

use crate::calibration::{fit_nonlinear, Calibration};
use crate::caloric::CaloricPair;
use crate::error::{Error, Result};
use crate::scheme::Trajectory;
use crate::spectral::norms::{time_norm, trapezoid};
use crate::spectral::{advect, laplacian, lp_norm, sobolev_seminorm, Sobolev, VectorField};

/// Relative slack on `‖e^{tΔ}f‖_3 ≤ ‖f‖_3`.
pub const CONTRACTION_SLACK: f64 = 1e-12;
/// Relative slack on `‖e^{dtΔ}f - f‖_3 ≤ dt ‖Δf‖_3`.
pub const ATTAINMENT_SLACK: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaloricFieldBounds {
    pub initial_l3: f64,
    pub linf_l3: f64,
    pub l5l5: f64,
    pub l5l5_bound: f64,
    pub l8l4: f64,
    pub l8l4_bound: f64,
    /// `‖f(dt) - f(0)‖_3`
    pub attainment: f64,
    /// `dt ‖Δf(0)‖_3`
    pub attainment_bound: f64,
}

impl CaloricFieldBounds {
    pub fn pass(&self) -> bool {
        self.linf_l3 <= self.initial_l3 * (1.0 + CONTRACTION_SLACK)
            && self.l5l5 <= self.l5l5_bound
            && self.l8l4 <= self.l8l4_bound
            && self.attainment <= self.attainment_bound * (1.0 + ATTAINMENT_SLACK)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaloricBoundsReport {
    pub v1: CaloricFieldBounds,
    pub h1: CaloricFieldBounds,
    pub pass: bool,
}

fn field_bounds(path: &[VectorField], dt: f64, cal: &Calibration) -> Result<CaloricFieldBounds> {
    let l3: Vec<f64> = path.iter().map(|f| lp_norm(f, 3.0)).collect::<Result<_>>()?;
    let l4: Vec<f64> = path.iter().map(|f| lp_norm(f, 4.0)).collect::<Result<_>>()?;
    let l5: Vec<f64> = path.iter().map(|f| lp_norm(f, 5.0)).collect::<Result<_>>()?;
    let horizon = dt * (path.len() - 1) as f64;
    let initial_l3 = l3[0];
    let attainment = match path.get(1) {
        Some(next) => lp_norm(&next.try_sub(&path[0])?, 3.0)?,
        None => 0.0,
    };
    Ok(CaloricFieldBounds {
        initial_l3,
        linf_l3: l3.iter().copied().fold(0.0, f64::max),
        l5l5: time_norm(&l5, dt, 5.0)?,
        l5l5_bound: cal.embed_l3_l5 * horizon.powf(0.2) * initial_l3,
        l8l4: time_norm(&l4, dt, 8.0)?,
        l8l4_bound: cal.embed_l3_l4 * horizon.powf(0.125) * initial_l3,
        attainment,
        attainment_bound: dt * lp_norm(&laplacian(&path[0]), 3.0)?,
    })
}

/// `L∞L³` contraction, `L⁵L⁵ ≤ C T^{1/5} ‖f‖_3`, `L⁸L⁴ ≤ C T^{1/8} ‖f‖_3`
/// with the fitted embedding constants, and first-step attainment.
pub fn caloric_bounds_audit(pair: &CaloricPair, cal: &Calibration) -> Result<CaloricBoundsReport> {
    if !cal.matches(pair.grid()) {
        return Err(Error::InvalidArgument("calibration belongs to another grid".into()));
    }
    let dt = pair.time().dt;
    let v1 = field_bounds(pair.v1(), dt, cal)?;
    let h1 = field_bounds(pair.h1(), dt, cal)?;
    let pass = v1.pass() && h1.pass();
    Ok(CaloricBoundsReport { v1, h1, pass })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AprioriRow {
    pub horizon: f64,
    /// `sup_{0<t≤T'} (‖v2‖² + ‖H2‖²)(t) / t^{3/2}`
    pub energy_ratio: f64,
    /// `(‖v2‖_X + ‖H2‖_X) on [0,T'] / T'^{3/4}`
    pub x_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AprioriReport {
    pub rows: Vec<AprioriRow>,
    /// largest max/min spread over the two ratio columns
    pub spread: f64,
    pub pass: bool,
}

pub const APRIORI_SPREAD: f64 = 4.0;

fn x_part(fields: &[VectorField], dt: f64) -> f64 {
    let sup = fields.iter().map(|f| f.l2_norm()).fold(0.0, f64::max);
    let grad: Vec<f64> = fields.iter().map(|f| sobolev_seminorm(f, Sobolev::Dot1).powi(2)).collect();
    sup + trapezoid(&grad, dt).sqrt()
}

fn spread(values: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = values.fold((f64::INFINITY, 0.0f64), |(lo, hi), x| (lo.min(x), hi.max(x)));
    if hi == 0.0 {
        1.0
    } else if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Growth proxy at `T/4, T/2, T` of the first window, where the perturbation
/// starts from zero; passes iff both ratio columns vary by less than `4×`.
pub fn apriori_audit(traj: &Trajectory) -> Result<AprioriReport> {
    let win = traj.windows.first().ok_or(Error::EmptyTrajectory)?;
    let steps = win.steps();
    if steps < 4 {
        return Err(Error::InvalidArgument("a-priori audit needs at least 4 steps".into()));
    }
    let dt = win.dt();
    let rows: Vec<AprioriRow> = [steps / 4, steps / 2, steps]
        .into_iter()
        .map(|m| {
            let t = m as f64 * dt;
            let sup = (1..=m)
                .map(|k| (win.v2[k].l2_norm_sqr() + win.h2[k].l2_norm_sqr()) / (k as f64 * dt).powf(1.5))
                .fold(0.0, f64::max);
            let x = x_part(&win.v2[..=m], dt) + x_part(&win.h2[..=m], dt);
            AprioriRow { horizon: t, energy_ratio: sup, x_ratio: x / t.powf(0.75) }
        })
        .collect();
    let s = spread(rows.iter().map(|r| r.energy_ratio)).max(spread(rows.iter().map(|r| r.x_ratio)));
    Ok(AprioriReport { rows, spread: s, pass: s < APRIORI_SPREAD })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonlinearRow {
    pub window: usize,
    pub field: String,
    pub l: f64,
    pub s: f64,
    /// `‖u·∇u‖_{L^l L^s}`
    pub norm: f64,
    /// `norm / (‖u‖_{L∞L²} + ‖∇u‖_{L²L²})`
    pub linear_ratio: f64,
    /// `norm / (‖u‖_{L∞L²} + ‖∇u‖_{L²L²})²`, bounded by the fitted constant
    pub quadratic_ratio: f64,
    pub constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonlinearReport {
    pub rows: Vec<NonlinearRow>,
    pub pass: bool,
}

/// Admissible pairs satisfy `3/s + 2/l = 4` with `1 < l ≤ 2`.
pub fn check_scaling(l: f64, s: f64) -> Result<()> {
    if (3.0 / s + 2.0 / l - 4.0).abs() > 1e-12 || !(l > 1.0 && l <= 2.0) {
        return Err(Error::ScalingViolation { l, s });
    }
    Ok(())
}

/// `‖u·∇u‖_{L^l L^s}` for `u ∈ {v2, H2}` on each window against
/// `C (‖u‖_{L∞L²} + ‖∇u‖_{L²L²})²`, with `C` the fitted constant for `(l, s)`.
pub fn nonlinear_norm_audit(traj: &Trajectory, pairs: &[(f64, f64)], cal: &Calibration) -> Result<NonlinearReport> {
    for &(l, s) in pairs {
        check_scaling(l, s)?;
    }
    if !cal.matches(traj.grid()) {
        return Err(Error::InvalidArgument("calibration belongs to another grid".into()));
    }
    let mut rows = Vec::new();
    for (w, win) in traj.windows.iter().enumerate() {
        let dt = win.dt();
        for (name, path) in [("v2", &win.v2), ("h2", &win.h2)] {
            let advected: Vec<VectorField> = traj.params.execution.map(path, |u| advect(u, u).expect("same grid"));
            let base = x_part(path, dt);
            for &(l, s) in pairs {
                let c = match cal.nonlinear_constant(l, s) {
                    Some(c) => c,
                    None => fit_nonlinear(traj.grid(), l, s)?,
                };
                let per_node: Vec<f64> = advected.iter().map(|f| lp_norm(f, s)).collect::<Result<_>>()?;
                let norm = time_norm(&per_node, dt, l)?;
                let (linear_ratio, quadratic_ratio) = if base > 0.0 { (norm / base, norm / (base * base)) } else { (0.0, 0.0) };
                rows.push(NonlinearRow { window: w, field: name.into(), l, s, norm, linear_ratio, quadratic_ratio, constant: c });
            }
        }
    }
    let pass = rows.iter().all(|r| r.quadratic_ratio.is_finite() && r.quadratic_ratio <= r.constant);
    Ok(NonlinearReport { rows, pass })
}

/// Per-node norms of one field.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeNorms {
    pub l2: f64,
    pub l3: f64,
    pub l4: f64,
    pub l5: f64,
    pub l10_3: f64,
    pub h1: f64,
    pub h_minus1: f64,
    pub h_minus3_2: f64,
}

impl NodeNorms {
    pub fn of(f: &VectorField) -> Result<Self> {
        Ok(Self {
            l2: f.l2_norm(),
            l3: lp_norm(f, 3.0)?,
            l4: lp_norm(f, 4.0)?,
            l5: lp_norm(f, 5.0)?,
            l10_3: lp_norm(f, 10.0 / 3.0)?,
            h1: sobolev_seminorm(f, Sobolev::Dot1),
            h_minus1: sobolev_seminorm(f, Sobolev::DotMinus1),
            h_minus3_2: sobolev_seminorm(f, Sobolev::Minus3Half),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LedgerRow {
    pub t: f64,
    pub v1: NodeNorms,
    pub h1: NodeNorms,
    pub v2: NodeNorms,
    pub h2: NodeNorms,
}

/// Space-time aggregates of one field over the whole trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixedNorms {
    pub linf_l2: f64,
    pub l2_h1: f64,
    pub linf_l3: f64,
    pub l5l5: f64,
    pub l8l4: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormLedger {
    pub rows: Vec<LedgerRow>,
    pub v1: MixedNorms,
    pub h1: MixedNorms,
    pub v2: MixedNorms,
    pub h2: MixedNorms,
}

fn mixed(norms: &[&NodeNorms], dt: f64) -> Result<MixedNorms> {
    let col = |f: fn(&NodeNorms) -> f64| norms.iter().map(|n| f(n)).collect::<Vec<f64>>();
    Ok(MixedNorms {
        linf_l2: col(|n| n.l2).into_iter().fold(0.0, f64::max),
        l2_h1: time_norm(&col(|n| n.h1), dt, 2.0)?,
        linf_l3: col(|n| n.l3).into_iter().fold(0.0, f64::max),
        l5l5: time_norm(&col(|n| n.l5), dt, 5.0)?,
        l8l4: time_norm(&col(|n| n.l4), dt, 8.0)?,
    })
}

/// Norms of `v1, H1, v2, H2` at every global node; a seam node reports the
/// later window. The aggregates integrate over global time.
pub fn norm_ledger(traj: &Trajectory) -> Result<NormLedger> {
    let dt = traj.dt();
    let rows = traj
        .params
        .execution
        .map_range(traj.steps() + 1, |m| {
            let (w, k) = traj.locate(m);
            let win = &traj.windows[w];
            Ok(LedgerRow {
                t: m as f64 * dt,
                v1: NodeNorms::of(&win.cal.v1()[k])?,
                h1: NodeNorms::of(&win.cal.h1()[k])?,
                v2: NodeNorms::of(&win.v2[k])?,
                h2: NodeNorms::of(&win.h2[k])?,
            })
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let pick = |f: fn(&LedgerRow) -> &NodeNorms| rows.iter().map(f).collect::<Vec<_>>();
    Ok(NormLedger {
        v1: mixed(&pick(|r| &r.v1), dt)?,
        h1: mixed(&pick(|r| &r.h1), dt)?,
        v2: mixed(&pick(|r| &r.v2), dt)?,
        h2: mixed(&pick(|r| &r.h2), dt)?,
        rows,
    })
}
