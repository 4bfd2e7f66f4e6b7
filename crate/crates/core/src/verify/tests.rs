use std::f64::consts::TAU;

use super::*;
use crate::calibration;
use crate::error::Error;
use crate::scheme::{pressure_decompose, solve_trajectory, SchemeParams, Trajectory};
use crate::spectral::norms::cumulative_trapezoid;
use crate::spectral::{random_divfree_field, taylor_green, Grid};

fn grid8() -> Grid {
    Grid::new(8, TAU).unwrap()
}

fn small_run(grid: &Grid, amp: f64, dt: f64, horizon: f64) -> Trajectory {
    let v0 = random_divfree_field(grid, 5, amp, 1.0).unwrap();
    let h0 = random_divfree_field(grid, 6, amp, 1.0).unwrap();
    solve_trajectory(&v0, &h0, &SchemeParams { horizon, dt, ..Default::default() }).unwrap()
}

fn max_step_residual(traj: &Trajectory) -> (f64, f64) {
    let (_, series) = global_energy_audit(traj);
    let s = &series[0];
    let r = s.step_residuals(traj.dt()).into_iter().fold(0.0f64, |a, b| a.max(b.abs()));
    (r, s.step_tolerance(traj.dt()))
}

#[test]
fn aligned_data_has_zero_balance() {
    let g = grid8();
    let v0 = taylor_green(&g, 0.1);
    let traj = solve_trajectory(&v0, &v0, &SchemeParams { horizon: 0.125, dt: 1.0 / 64.0, ..Default::default() }).unwrap();
    let (rep, _) = global_energy_audit(&traj);
    assert!(rep.pass);
    assert!(rep.rows.iter().all(|r| r.lhs == 0.0 && r.rhs == 0.0));
    let ledger = norm_ledger(&traj).unwrap();
    assert_eq!(ledger.v2.linf_l2, 0.0);
    assert!((ledger.v1.linf_l2 - v0.l2_norm()).abs() <= 1e-12 * v0.l2_norm());
}

#[test]
fn global_balance_closes_to_second_order() {
    let g = grid8();
    let coarse = small_run(&g, 1e-2, 1.0 / 64.0, 0.125);
    let fine = small_run(&g, 1e-2, 1.0 / 128.0, 0.125);
    let (rc, tc) = max_step_residual(&coarse);
    let (rf, tf) = max_step_residual(&fine);
    assert!(rc <= tc && rf <= tf, "{rc} > {tc} or {rf} > {tf}");
    assert!(rc / rf > 3.0, "order ratio {}", rc / rf);
    let (rep, _) = global_energy_audit(&fine);
    assert!(rep.pass, "min residual {} vs {:?}", rep.min_residual, rep.tolerances);
}

#[test]
fn time_only_local_balance_matches_weighted_global() {
    let g = grid8();
    let traj = small_run(&g, 0.05, 1.0 / 64.0, 0.25);
    let phi = TestFunction::time_only(0.125, 0.1);
    let (local, _) = local_energy_audit(&traj, &phi).unwrap();
    let (_, series) = global_energy_audit(&traj);
    let s = &series[0];
    let dt = traj.dt();
    let b = |t: f64| {
        let x = (t - 0.125) / 0.1;
        if x.abs() >= 1.0 { (0.0, 0.0) } else { ((1.0 - x * x).powi(4), -8.0 * x * (1.0 - x * x).powi(3) / 0.1) }
    };
    let energy: Vec<f64> = (0..s.t.len()).map(|m| 2.0 * (s.e_v2[m] + s.e_h2[m])).collect();
    let weighted_diss: Vec<f64> = (0..s.t.len()).map(|m| 2.0 * b(s.t[m]).0 * (s.diss_v2[m] + s.diss_h2[m])).collect();
    let flux: Vec<f64> = (0..s.t.len()).map(|m| b(s.t[m]).1 * energy[m] + 2.0 * b(s.t[m]).0 * s.cross[m]).collect();
    let (int_d, int_f) = (cumulative_trapezoid(&weighted_diss, dt), cumulative_trapezoid(&flux, dt));
    let scale = local.rows.iter().map(|r| r.lhs.abs()).fold(0.0, f64::max);
    assert!(scale > 0.0);
    for (m, row) in local.rows.iter().enumerate() {
        assert!((row.lhs - (b(s.t[m]).0 * energy[m] + int_d[m])).abs() <= 1e-10 * scale);
        assert!((row.rhs - int_f[m]).abs() <= 1e-10 * scale);
    }
    assert!(local.pass);
}

#[test]
fn local_balance_passes_with_bump() {
    let g = grid8();
    let traj = small_run(&g, 0.05, 1.0 / 64.0, 0.25);
    let (rep, _) = local_energy_audit(&traj, &TestFunction::preset(&g, 0.0, 0.25)).unwrap();
    assert!(rep.pass, "min {} tol {:?}", rep.min_residual, rep.tolerances);
    assert!(rep.rows.iter().any(|r| r.lhs > 0.0));
}

#[test]
fn local_audit_rejects_support_touching_the_ends() {
    let g = grid8();
    let traj = small_run(&g, 0.01, 1.0 / 32.0, 0.25);
    for phi in [TestFunction::time_only(0.05, 0.05), TestFunction::time_only(0.2, 0.1)] {
        assert!(matches!(local_energy_audit(&traj, &phi), Err(Error::UnsupportedTestFunction(_))));
    }
    let mut phi = TestFunction::preset(&g, 0.0, 0.25);
    phi.radius = 4.0;
    assert!(matches!(local_energy_audit(&traj, &phi), Err(Error::UnsupportedTestFunction(_))));
}

#[test]
fn apriori_ratios_stay_bounded() {
    let g = grid8();
    let rep = apriori_audit(&small_run(&g, 0.05, 1.0 / 64.0, 0.5)).unwrap();
    assert_eq!(rep.rows.len(), 3);
    assert!(rep.pass, "spread {}", rep.spread);
}

#[test]
fn nonlinear_audit_checks_scaling() {
    let g = grid8();
    let cal = calibration::for_grid(&g).unwrap();
    let traj = small_run(&g, 0.05, 1.0 / 32.0, 0.25);
    assert!(matches!(nonlinear_norm_audit(&traj, &[(1.0, 1.0)], &cal), Err(Error::ScalingViolation { .. })));
    assert!(matches!(check_scaling(1.0, 3.0), Err(Error::ScalingViolation { .. })));
    let rep = nonlinear_norm_audit(&traj, &calibration::NONLINEAR_PAIRS, &cal).unwrap();
    assert!(rep.pass);
    assert_eq!(rep.rows.len(), 2 * calibration::NONLINEAR_PAIRS.len());
    assert!(rep.rows.iter().all(|r| r.norm > 0.0 && r.quadratic_ratio > r.linear_ratio));
}

#[test]
fn caloric_bounds_hold_for_random_data() {
    let g = grid8();
    let cal = calibration::for_grid(&g).unwrap();
    for seed in 0..4 {
        let traj = {
            let v0 = random_divfree_field(&g, 100 + seed, 1.0, 1.0).unwrap();
            let h0 = random_divfree_field(&g, 200 + seed, 0.5, 2.0).unwrap();
            crate::caloric::caloric_pair(&v0, &h0, crate::caloric::TimeGrid::new(32, 1.0 / 32.0).unwrap()).unwrap()
        };
        let rep = caloric_bounds_audit(&traj, &cal).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!(rep.v1.attainment > 0.5 * rep.v1.attainment_bound);
    }
}

#[test]
fn oscillation_runs_on_pressure_parts() {
    let g = grid8();
    let cal = calibration::for_grid(&g).unwrap();
    let traj = small_run(&g, 0.05, 1.0 / 32.0, 0.125);
    let dec = pressure_decompose(&traj).unwrap();
    let reps = pressure_oscillation_audit(&dec, traj.dt(), &cal).unwrap();
    assert_eq!(reps.len(), traj.windows.len());
    assert!(reps.iter().all(|r| r.pass), "{:?}", reps[0].max_ratio);
    assert!(reps[0].max_ratio.iter().all(|&m| m > 0.0));
}

#[test]
fn epsilon_sweep_rejects_bad_levels() {
    let g = grid8();
    let v0 = taylor_green(&g, 0.01);
    let p = SchemeParams { horizon: 0.125, dt: 1.0 / 32.0, ..Default::default() };
    assert!(epsilon_sweep(&v0, &v0, &p, &[0.25, 0.5]).is_err());
    assert!(epsilon_sweep(&v0, &v0, &p, &[]).is_err());
}

#[test]
fn epsilon_sweep_distances_decrease() {
    let g = grid8();
    let v0 = random_divfree_field(&g, 3, 0.05, 1.0).unwrap();
    let h0 = random_divfree_field(&g, 4, 0.05, 1.0).unwrap();
    let p = SchemeParams { horizon: 0.125, dt: 1.0 / 64.0, ..Default::default() };
    let rep = epsilon_sweep(&v0, &h0, &p, &[0.5, 0.25, 0.125]).unwrap();
    assert!(rep.pass, "{rep:?}");
    assert!(rep.rows[0].distance > 0.0);
}

#[test]
fn epsilon_sweep_of_zero_data_is_all_zero() {
    let g = grid8();
    let z = crate::spectral::VectorField::zeros(&g);
    let rep = epsilon_sweep(&z, &z, &SchemeParams { horizon: 0.125, dt: 1.0 / 32.0, ..Default::default() }, &[0.5, 0.25, 0.125]).unwrap();
    assert!(rep.pass);
    assert!(rep.rows.iter().all(|r| r.distance == 0.0));
}
