//! `run` and `verify`: solve (or import), audit, and write artifacts.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use super::config::{AuditName, RunConfig};
use super::{write_csv, write_json, FORMAT_VERSION};
use crate::calibration::{self, NONLINEAR_PAIRS};
use crate::error::Result;
use crate::exec::Execution;
use crate::fixedpoint::FixedPointCertificate;
use crate::scheme::{export_trajectory, import_trajectory, poisson_residual, pressure_decompose, solve_trajectory, Trajectory};
use crate::spectral::lp_norm;
use crate::verify::{
    apriori_audit, caloric_bounds_audit, global_energy_audit, local_energy_audit, nonlinear_norm_audit, pressure_oscillation_audit,
    EnergySeries, TestFunction,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditOutcome {
    pub name: String,
    pub pass: bool,
    /// worst observed value over its threshold; passing audits have `≤ 1`
    pub worst_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowSummary {
    pub start_node: usize,
    pub steps: usize,
    pub halvings: usize,
    pub certificate: FixedPointCertificate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub format_version: String,
    pub crate_version: String,
    pub calibration_hash: String,
    pub config: RunConfig,
    pub windows: Vec<WindowSummary>,
    pub seam_jump: f64,
    pub audits: Vec<AuditOutcome>,
    pub pass: bool,
}

/// Wall-clock seconds, kept out of the summary so that it stays reproducible.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Timings {
    pub solve: f64,
    pub audits: BTreeMap<String, f64>,
    pub total: f64,
}

#[derive(Serialize)]
struct EnergyCsvRow {
    t: f64,
    #[serde(rename = "E_v2")]
    e_v2: f64,
    #[serde(rename = "E_H2")]
    e_h2: f64,
    #[serde(rename = "Diss_v2")]
    diss_v2: f64,
    #[serde(rename = "Diss_H2")]
    diss_h2: f64,
    lhs_global: f64,
    rhs_global: f64,
    residual_global: f64,
    #[serde(rename = "L3_v")]
    l3_v: f64,
    #[serde(rename = "L3_H")]
    l3_h: f64,
    picard_iters: usize,
}

fn ratio(value: f64, limit: f64) -> f64 {
    if value == 0.0 {
        0.0
    } else {
        value / limit
    }
}

fn energy_rows(traj: &Trajectory, series: &[EnergySeries], report: &crate::verify::EnergyReport) -> Result<Vec<EnergyCsvRow>> {
    let mut rows = Vec::new();
    let mut k = 0;
    for (w, (win, s)) in traj.windows.iter().zip(series).enumerate() {
        let norms = traj
            .params
            .execution
            .map_range(s.t.len(), |m| Ok((lp_norm(&win.total_v(m), 3.0)?, lp_norm(&win.total_h(m), 3.0)?)))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        for m in 0..s.t.len() {
            let r = &report.rows[k];
            k += 1;
            if w > 0 && m == 0 {
                continue;
            }
            rows.push(EnergyCsvRow {
                t: s.t[m],
                e_v2: s.e_v2[m],
                e_h2: s.e_h2[m],
                diss_v2: s.diss_v2[m],
                diss_h2: s.diss_h2[m],
                lhs_global: r.lhs,
                rhs_global: r.rhs,
                residual_global: r.residual,
                l3_v: norms[m].0,
                l3_h: norms[m].1,
                picard_iters: win.certificate.iterations,
            });
        }
    }
    Ok(rows)
}

fn energy_ratio(report: &crate::verify::EnergyReport) -> f64 {
    report.rows.iter().map(|r| ratio(-r.residual.min(0.0), report.tolerances[r.window])).fold(0.0, f64::max)
}

/// Runs the configured audits on `traj`, writing `energy.csv` and
/// `audits/<name>.json` into `out`.
fn audit(traj: &Trajectory, config: &RunConfig, out: &Path, timings: &mut Timings) -> Result<Vec<AuditOutcome>> {
    let audits_dir = out.join("audits");
    std::fs::create_dir_all(&audits_dir)?;
    let grid = traj.grid().clone();
    let cal = calibration::for_grid(&grid)?;
    let mut outcomes = Vec::new();

    let start = Instant::now();
    let (global, series) = global_energy_audit(traj);
    write_csv(&out.join("energy.csv"), &energy_rows(traj, &series, &global)?)?;
    let mut names = config.audits.names.clone();
    names.sort();
    names.dedup();
    let mut record = |name: AuditName, pass: bool, worst: f64, start: Instant, timings: &mut Timings| {
        timings.audits.insert(name.as_str().into(), start.elapsed().as_secs_f64());
        outcomes.push(AuditOutcome { name: name.as_str().into(), pass, worst_ratio: worst });
    };
    for name in names {
        let path = audits_dir.join(format!("{}.json", name.as_str()));
        let t0 = if name == AuditName::GlobalEnergy { start } else { Instant::now() };
        match name {
            AuditName::GlobalEnergy => {
                write_json(&path, &global)?;
                record(name, global.pass, energy_ratio(&global), t0, timings);
            }
            AuditName::LocalEnergy => {
                let w0 = &traj.windows[0];
                let phi = TestFunction::preset(&grid, 0.0, w0.steps() as f64 * traj.dt());
                let (rep, _) = local_energy_audit(traj, &phi)?;
                write_json(&path, &rep)?;
                record(name, rep.pass, energy_ratio(&rep), t0, timings);
            }
            AuditName::Apriori => {
                let rep = apriori_audit(traj)?;
                write_json(&path, &rep)?;
                record(name, rep.pass, rep.spread / crate::verify::norms::APRIORI_SPREAD, t0, timings);
            }
            AuditName::CaloricBounds => {
                let reps = traj.windows.iter().map(|w| caloric_bounds_audit(&w.cal, &cal)).collect::<Result<Vec<_>>>()?;
                use crate::verify::norms::{ATTAINMENT_SLACK, CONTRACTION_SLACK};
                let worst = reps
                    .iter()
                    .flat_map(|r| [&r.v1, &r.h1])
                    .map(|b| {
                        ratio(b.linf_l3, b.initial_l3 * (1.0 + CONTRACTION_SLACK))
                            .max(ratio(b.l5l5, b.l5l5_bound))
                            .max(ratio(b.l8l4, b.l8l4_bound))
                            .max(ratio(b.attainment, b.attainment_bound * (1.0 + ATTAINMENT_SLACK)))
                    })
                    .fold(0.0, f64::max);
                write_json(&path, &reps)?;
                record(name, reps.iter().all(|r| r.pass), worst, t0, timings);
            }
            AuditName::NonlinearNorms => {
                let rep = nonlinear_norm_audit(traj, &NONLINEAR_PAIRS, &cal)?;
                let worst = rep.rows.iter().map(|r| ratio(r.quadratic_ratio, r.constant)).fold(0.0, f64::max);
                write_json(&path, &rep)?;
                record(name, rep.pass, worst, t0, timings);
            }
            AuditName::Pressure => {
                let tol = &config.audits.tolerances;
                let poisson = traj
                    .params
                    .execution
                    .map_range(traj.steps() + 1, |m| poisson_residual(&traj.total_v(m), &traj.total_h(m)))
                    .into_iter()
                    .collect::<Result<Vec<f64>>>()?
                    .into_iter()
                    .fold(0.0, f64::max);
                let dec = pressure_decompose(traj)?;
                let worst = ratio(poisson, tol.poisson).max(ratio(dec.identity_defect, tol.pressure_identity));
                #[derive(Serialize)]
                struct PressureReport<'a> {
                    poisson_residual: f64,
                    identity_defect: f64,
                    stokes: &'a [crate::scheme::StokesRow],
                    pass: bool,
                }
                let pass = worst <= 1.0;
                write_json(&path, &PressureReport { poisson_residual: poisson, identity_defect: dec.identity_defect, stokes: &dec.stokes, pass })?;
                record(name, pass, worst, t0, timings);
            }
            AuditName::Oscillation => {
                let dec = pressure_decompose(traj)?;
                let reps = pressure_oscillation_audit(&dec, traj.dt(), &cal)?;
                let worst = reps
                    .iter()
                    .flat_map(|r| r.max_ratio.iter().zip(&r.thresholds).map(|(m, t)| ratio(*m, *t)))
                    .fold(0.0, f64::max);
                write_json(&path, &reps)?;
                record(name, reps.iter().all(|r| r.pass), worst, t0, timings);
            }
        }
    }
    Ok(outcomes)
}

fn summarize(traj: &Trajectory, config: &RunConfig, audits: Vec<AuditOutcome>) -> Result<RunSummary> {
    let cal = calibration::for_grid(traj.grid())?;
    Ok(RunSummary {
        format_version: FORMAT_VERSION.into(),
        crate_version: env!("CARGO_PKG_VERSION").into(),
        calibration_hash: cal.hash(),
        config: config.clone(),
        windows: traj
            .windows
            .iter()
            .map(|w| WindowSummary { start_node: w.start_node, steps: w.steps(), halvings: w.halvings, certificate: w.certificate.clone() })
            .collect(),
        seam_jump: traj.seam_jump(),
        pass: audits.iter().all(|a| a.pass),
        audits,
    })
}

fn finish(out: &Path, summary: &RunSummary, mut timings: Timings, start: Instant) -> Result<()> {
    timings.total = start.elapsed().as_secs_f64();
    write_json(&out.join("summary.json"), summary)?;
    write_json(&out.join("timings.json"), &timings)
}

/// Solves the configured problem, exports the trajectory to `out/trajectory`
/// and writes `energy.csv`, the audit reports, `summary.json` and `timings.json`.
pub fn run(config: &RunConfig, out: &Path, execution: Execution) -> Result<RunSummary> {
    config.validate()?;
    let start = Instant::now();
    std::fs::create_dir_all(out)?;
    let grid = config.grid()?;
    let (v0, h0) = config.initial_data(&grid)?;
    let traj = solve_trajectory(&v0, &h0, &config.params(execution))?;
    let mut timings = Timings { solve: start.elapsed().as_secs_f64(), ..Timings::default() };
    export_trajectory(&traj, &out.join("trajectory"))?;
    let audits = audit(&traj, config, out, &mut timings)?;
    let summary = summarize(&traj, config, audits)?;
    finish(out, &summary, timings, start)?;
    Ok(summary)
}

/// Audits a previously exported trajectory with the audit list of `config`.
pub fn verify(config: &RunConfig, trajectory_dir: &Path, out: &Path, execution: Execution) -> Result<RunSummary> {
    config.validate()?;
    let start = Instant::now();
    std::fs::create_dir_all(out)?;
    let mut traj = import_trajectory(trajectory_dir)?;
    traj.params.execution = execution;
    let mut timings = Timings::default();
    let audits = audit(&traj, config, out, &mut timings)?;
    let summary = summarize(&traj, config, audits)?;
    finish(out, &summary, timings, start)?;
    Ok(summary)
}
