//! Grönwall bounds and the weak-strong stability experiment.
//!
//! Two runs `a`, `b` on the same nodes are compared through the total fields,
//! `D(t) = ‖v_a - v_b‖² + ‖H_a - H_b‖²`, and the observed growth is bounded by
//! an envelope `D(t) ≤ K δ² exp(Ĉ ∫₀ᵗ (g1 + g2))` with
//! `g1 = ‖v1‖_5^5`, `g2 = ‖H1‖_5^5` of the baseline.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scheme::{solve_trajectory, SchemeParams, Trajectory};
use crate::spectral::norms::cumulative_trapezoid;
use crate::spectral::{lp_norm, random_divfree_field, sobolev_seminorm, Sobolev, VectorField};

/// Largest admissible `K` in the stability verdict.
pub const ENVELOPE_LIMIT: f64 = 10.0;
/// `D` below this counts as roundoff and is left out of the envelope.
const D_FLOOR: f64 = 1e-28;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GronwallBound {
    /// `exp(Φ(t)) (η0 + Ψ(t))`
    pub a_form: Vec<f64>,
    /// `η0 exp(Φ(t))`, the bound for a constant forcing level
    pub b_form: Vec<f64>,
}

fn check_weights(w: &[f64]) -> Result<()> {
    match w.iter().position(|&x| !(x >= 0.0)) {
        Some(index) => Err(Error::NegativeWeight { index, value: w[index] }),
        None => Ok(()),
    }
}

/// Both Grönwall forms for `η' ≤ φη + ψ`, `η(0) = η0`, on uniform nodes.
/// With `ψ ≡ 0` the two forms coincide; this is checked on every call.
pub fn gronwall_bound(eta0: f64, phi: &[f64], psi: &[f64], dt: f64) -> Result<GronwallBound> {
    if phi.len() != psi.len() {
        return Err(Error::NodeMismatch);
    }
    if phi.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    check_weights(phi)?;
    check_weights(psi)?;
    if !(eta0 >= 0.0) {
        return Err(Error::NegativeWeight { index: 0, value: eta0 });
    }
    let big_phi = cumulative_trapezoid(phi, dt);
    let big_psi = cumulative_trapezoid(psi, dt);
    let a_form: Vec<f64> = big_phi.iter().zip(&big_psi).map(|(p, q)| p.exp() * (eta0 + q)).collect();
    let b_form: Vec<f64> = big_phi.iter().map(|p| eta0 * p.exp()).collect();
    if psi.iter().all(|&x| x == 0.0) {
        let agree = a_form.iter().zip(&b_form).all(|(a, b)| (a - b).abs() <= 1e-14 * a.abs().max(1e-300));
        assert!(agree, "Grönwall forms disagree with zero forcing");
    }
    Ok(GronwallBound { a_form, b_form })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityRow {
    pub t: f64,
    pub d: f64,
    /// `‖∇(v_a - v_b)‖² + ‖∇(H_a - H_b)‖²`
    pub dissipation: f64,
    pub g1: f64,
    pub g2: f64,
    /// `K δ² exp(Ĉ G(t))`
    pub envelope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub rows: Vec<StabilityRow>,
    pub delta: f64,
    /// smallest `Ĉ` with `D(t) ≤ D(0) exp(Ĉ G(t))`, `G = ∫(g1 + g2)`
    pub c_hat: f64,
    /// least-squares slope of `log D` against `G` over nodes above the floor, for comparison
    pub c_hat_lsq: f64,
    /// `max_t D / (δ² exp(Ĉ G))`
    pub k: f64,
    pub sup_d: f64,
    pub pass: bool,
}

/// Smallest `C` with `D(t) ≤ D(0) exp(C G(t))` at every node where `G > 0`.
/// Zero when no node qualifies.
fn envelope_exponent(d: &[f64], g: &[f64]) -> f64 {
    if d[0] <= D_FLOOR {
        return 0.0;
    }
    d.iter()
        .zip(g)
        .filter(|(&x, &y)| y > 0.0 && x > D_FLOOR)
        .map(|(x, y)| (x / d[0]).ln() / y)
        .reduce(f64::max)
        .unwrap_or(0.0)
}

fn lsq_slope(d: &[f64], g: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = d.iter().zip(g).filter(|(&x, _)| x > D_FLOOR).map(|(x, y)| (*y, x.ln())).collect();
    if pts.len() < 2 {
        return 0.0;
    }
    let n = pts.len() as f64;
    let (mg, ml) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let sxx: f64 = pts.iter().map(|p| (p.0 - mg).powi(2)).sum();
    if sxx <= 0.0 {
        return 0.0;
    }
    pts.iter().map(|p| (p.0 - mg) * (p.1 - ml)).sum::<f64>() / sxx
}

/// `D`, dissipation and `g1, g2` of run `a` against run `b`, with the
/// envelope fitted for perturbation size `delta`.
pub fn difference_energy(a: &Trajectory, b: &Trajectory, delta: f64) -> Result<StabilityReport> {
    if a.grid() != b.grid() {
        return Err(Error::GridMismatch);
    }
    if a.steps() != b.steps() || a.dt() != b.dt() {
        return Err(Error::NodeMismatch);
    }
    if !(delta >= 0.0) {
        return Err(Error::InvalidArgument(format!("perturbation size must be nonnegative, got {delta}")));
    }
    let dt = a.dt();
    let per_node = a
        .params
        .execution
        .map_range(a.steps() + 1, |m| {
            let (w, k) = a.locate(m);
            let win = &a.windows[w];
            let dv = a.total_v(m).try_sub(&b.total_v(m))?;
            let dh = a.total_h(m).try_sub(&b.total_h(m))?;
            Ok((
                dv.l2_norm_sqr() + dh.l2_norm_sqr(),
                sobolev_seminorm(&dv, Sobolev::Dot1).powi(2) + sobolev_seminorm(&dh, Sobolev::Dot1).powi(2),
                lp_norm(&win.cal.v1()[k], 5.0)?.powi(5),
                lp_norm(&win.cal.h1()[k], 5.0)?.powi(5),
            ))
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let weight: Vec<f64> = per_node.iter().map(|r| r.2 + r.3).collect();
    let big_g = cumulative_trapezoid(&weight, dt);
    let d: Vec<f64> = per_node.iter().map(|r| r.0).collect();
    let c_hat = envelope_exponent(&d, &big_g);
    let d2 = delta * delta;
    let c_hat_lsq = lsq_slope(&d, &big_g);
    let k = per_node
        .iter()
        .zip(&big_g)
        .map(|(r, g)| if r.0 == 0.0 { 0.0 } else { r.0 / (d2 * (c_hat * g).exp()) })
        .fold(0.0, f64::max);
    let rows: Vec<StabilityRow> = per_node
        .iter()
        .zip(&big_g)
        .enumerate()
        .map(|(m, (r, g))| StabilityRow {
            t: m as f64 * dt,
            d: r.0,
            dissipation: r.1,
            g1: r.2,
            g2: r.3,
            envelope: k * d2 * (c_hat * g).exp(),
        })
        .collect();
    let sup_d = rows.iter().map(|r| r.d).fold(0.0, f64::max);
    let pass = k.is_finite() && k <= ENVELOPE_LIMIT;
    Ok(StabilityReport { rows, delta, c_hat, c_hat_lsq, k, sup_d, pass })
}

/// A solenoidal pair `(p_v, p_h)` whose joint `L³` norm (of the six-component
/// field) equals `delta`.
pub fn perturbation(v0: &VectorField, delta: f64, seed: u64) -> Result<(VectorField, VectorField)> {
    let grid = v0.grid();
    let pv = random_divfree_field(grid, seed.wrapping_mul(2), 1.0, 1.0)?;
    let ph = random_divfree_field(grid, seed.wrapping_mul(2).wrapping_add(1), 1.0, 1.0)?;
    let (a, b) = (pv.to_physical(), ph.to_physical());
    let cube: f64 = (0..grid.len())
        .map(|q| {
            let s: f64 = (0..3).map(|d| a[d][q] * a[d][q] + b[d][q] * b[d][q]).sum();
            s.powf(1.5)
        })
        .sum::<f64>()
        * grid.cell_volume();
    let scale = if delta == 0.0 { 0.0 } else { delta / cube.cbrt() };
    Ok((pv.scaled(scale), ph.scaled(scale)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityStudy {
    pub reports: Vec<StabilityReport>,
    /// `max Ĉ / min Ĉ` over the perturbation sizes (by magnitude)
    pub c_hat_spread: f64,
    /// spread of `sup D / δ²` over the perturbation sizes
    pub scaling_spread: f64,
    pub pass: bool,
}

fn magnitude_spread(xs: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = xs.fold((f64::INFINITY, 0.0f64), |(lo, hi), x| (lo.min(x.abs()), hi.max(x.abs())));
    if hi == 0.0 {
        1.0
    } else if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Perturbs `(v0, h0)` by a seeded pair of each size in `deltas` and compares
/// with the unperturbed run. Passes iff every envelope holds with `K ≤ 10`,
/// `Ĉ` agrees within a factor 2 across sizes, and `sup D / δ²` does too.
pub fn stability_experiment(v0: &VectorField, h0: &VectorField, params: &SchemeParams, deltas: &[f64], seed: u64) -> Result<StabilityStudy> {
    if deltas.is_empty() {
        return Err(Error::InvalidArgument("no perturbation sizes".into()));
    }
    let base = solve_trajectory(v0, h0, params)?;
    let reports = deltas
        .iter()
        .map(|&delta| {
            if !(delta >= 0.0) {
                return Err(Error::InvalidArgument(format!("perturbation size must be nonnegative, got {delta}")));
            }
            let (pv, ph) = perturbation(v0, delta, seed)?;
            let other = solve_trajectory(&v0.try_add(&pv)?, &h0.try_add(&ph)?, params)?;
            difference_energy(&other, &base, delta)
        })
        .collect::<Result<Vec<_>>>()?;
    let sized: Vec<&StabilityReport> = reports.iter().filter(|r| r.delta > 0.0).collect();
    let c_hat_spread = magnitude_spread(sized.iter().map(|r| r.c_hat));
    let scaling_spread = magnitude_spread(sized.iter().map(|r| r.sup_d / (r.delta * r.delta)));
    let signs_agree = sized.windows(2).all(|w| w[0].c_hat.signum() == w[1].c_hat.signum());
    let pass = reports.iter().all(|r| r.pass) && c_hat_spread <= 2.0 && signs_agree && scaling_spread <= 2.0;
    Ok(StabilityStudy { reports, c_hat_spread, scaling_spread, pass })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmallnessRow {
    pub t: f64,
    /// `sup_{s≤t} ‖v(s) - v0‖_3`
    pub mu_v: f64,
    /// `sup_{s≤t} ‖H(s) - h0‖_3`
    pub mu_h: f64,
}

/// Running `L³` distance of the total fields from the initial data.
pub fn smallness_window(traj: &Trajectory) -> Result<Vec<SmallnessRow>> {
    let first = traj.windows.first().ok_or(Error::EmptyTrajectory)?;
    let (v0, h0) = (first.cal.v0(), first.cal.h0());
    let per_node = traj
        .params
        .execution
        .map_range(traj.steps() + 1, |m| Ok((lp_norm(&traj.total_v(m).try_sub(v0)?, 3.0)?, lp_norm(&traj.total_h(m).try_sub(h0)?, 3.0)?)))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let (mut mv, mut mh) = (0.0f64, 0.0f64);
    Ok(per_node
        .iter()
        .enumerate()
        .map(|(m, (a, b))| {
            mv = mv.max(*a);
            mh = mh.max(*b);
            SmallnessRow { t: m as f64 * traj.dt(), mu_v: mv, mu_h: mh }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{taylor_green, Grid};
    use std::f64::consts::TAU;

    fn params(horizon: f64, dt: f64) -> SchemeParams {
        SchemeParams { horizon, dt, ..Default::default() }
    }

    #[test]
    fn gronwall_rejects_negative_weights() {
        assert!(matches!(gronwall_bound(1.0, &[1.0, -0.5], &[0.0, 0.0], 0.1), Err(Error::NegativeWeight { index: 1, .. })));
        assert!(matches!(gronwall_bound(1.0, &[1.0, 1.0], &[0.0, f64::NAN], 0.1), Err(Error::NegativeWeight { index: 1, .. })));
        assert!(matches!(gronwall_bound(1.0, &[1.0], &[0.0, 0.0], 0.1), Err(Error::NodeMismatch)));
    }

    #[test]
    fn gronwall_forms_match_closed_forms() {
        let dt = 0.01;
        let phi = vec![2.0; 101];
        let zero = vec![0.0; 101];
        let b = gronwall_bound(3.0, &phi, &zero, dt).unwrap();
        for (m, (x, y)) in b.a_form.iter().zip(&b.b_form).enumerate() {
            let exact = 3.0 * (2.0 * m as f64 * dt).exp();
            assert!((x - exact).abs() <= 1e-12 * exact && x == y);
        }
        // η' = 2η + 1 has η(t) = (η0 + 1/2) e^{2t} - 1/2, below the a-form
        let b = gronwall_bound(3.0, &phi, &vec![1.0; 101], dt).unwrap();
        for (m, x) in b.a_form.iter().enumerate() {
            let t = m as f64 * dt;
            assert!(*x >= 3.5 * (2.0 * t).exp() - 0.5 - 1e-12);
        }
    }

    #[test]
    fn identical_runs_have_zero_difference() {
        let g = Grid::new(8, TAU).unwrap();
        let v0 = random_divfree_field(&g, 9, 0.05, 1.0).unwrap();
        let a = solve_trajectory(&v0, &v0.scaled(0.5), &params(0.125, 1.0 / 32.0)).unwrap();
        let rep = difference_energy(&a, &a, 1e-3).unwrap();
        assert!(rep.rows.iter().all(|r| r.d == 0.0));
        assert_eq!(rep.c_hat, 0.0);
        let short = solve_trajectory(&v0, &v0, &params(0.0625, 1.0 / 32.0)).unwrap();
        assert!(matches!(difference_energy(&a, &short, 1e-3), Err(Error::NodeMismatch)));
    }

    #[test]
    fn stability_envelope_holds_and_scales() {
        let g = Grid::new(8, TAU).unwrap();
        let v0 = random_divfree_field(&g, 9, 0.05, 1.0).unwrap();
        let h0 = random_divfree_field(&g, 10, 0.05, 1.0).unwrap();
        let study = stability_experiment(&v0, &h0, &params(0.125, 1.0 / 32.0), &[1e-4, 1e-5], 3).unwrap();
        assert!(study.pass, "{:?}", study.reports.iter().map(|r| (r.k, r.c_hat)).collect::<Vec<_>>());
        let (pv, ph) = perturbation(&v0, 1e-4, 3).unwrap();
        let d0 = pv.l2_norm_sqr() + ph.l2_norm_sqr();
        assert!((study.reports[0].rows[0].d - d0).abs() <= 1e-12 * d0);
        for r in &study.reports {
            assert!(r.rows.iter().all(|row| row.d <= row.envelope * (1.0 + 1e-12)));
        }
    }

    #[test]
    fn loose_picard_tolerance_stays_within_its_scale() {
        let g = Grid::new(8, TAU).unwrap();
        let v0 = random_divfree_field(&g, 9, 0.05, 1.0).unwrap();
        let h0 = random_divfree_field(&g, 10, 0.05, 1.0).unwrap();
        let tight = solve_trajectory(&v0, &h0, &params(0.125, 1.0 / 32.0)).unwrap();
        let loose = solve_trajectory(&v0, &h0, &SchemeParams { picard_tol: 1e-5, ..params(0.125, 1.0 / 32.0) }).unwrap();
        let rep = difference_energy(&loose, &tight, 1.0).unwrap();
        let x = tight.windows[0].x_norm();
        assert!(rep.sup_d <= (1e-5 * x).powi(2) * 10.0, "{} vs {}", rep.sup_d, x);
    }

    #[test]
    fn zero_perturbation_passes_trivially() {
        let g = Grid::new(8, TAU).unwrap();
        let v0 = random_divfree_field(&g, 9, 0.05, 1.0).unwrap();
        let study = stability_experiment(&v0, &v0.scaled(0.3), &params(0.0625, 1.0 / 32.0), &[0.0], 1).unwrap();
        assert!(study.pass);
        assert!(study.reports[0].rows.iter().all(|r| r.d == 0.0));
    }

    #[test]
    fn gronwall_quadratic_weight() {
        let dt = 1e-3;
        let phi: Vec<f64> = (0..=1000).map(|m| m as f64 * dt).collect();
        let b = gronwall_bound(2.0, &phi, &vec![0.0; 1001], dt).unwrap();
        for (m, x) in b.a_form.iter().enumerate() {
            let t = m as f64 * dt;
            assert!((x - 2.0 * (t * t / 2.0).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn smallness_window_is_monotone() {
        let g = Grid::new(8, TAU).unwrap();
        let v0 = taylor_green(&g, 0.1);
        let traj = solve_trajectory(&v0, &v0.scaled(0.5), &params(0.125, 1.0 / 32.0)).unwrap();
        let rows = smallness_window(&traj).unwrap();
        assert_eq!(rows[0].mu_v, 0.0);
        assert!(rows.windows(2).all(|w| w[1].mu_v >= w[0].mu_v && w[1].mu_h >= w[0].mu_h));
        assert!(rows.last().unwrap().mu_v > 0.0);
    }
}
