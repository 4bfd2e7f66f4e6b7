//! Parameter sweeps, the stability study and the markdown report.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::config::RunConfig;
use super::{write_csv, write_json};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::scheme::{solve_trajectory, Trajectory};
use crate::spectral::Grid;
use crate::uniqueness::{smallness_window, stability_experiment, SmallnessRow, StabilityStudy};
use crate::verify::epsilon_sweep;

/// Below this distance the n-sweep counts as converged to round-off.
pub const N_SWEEP_FLOOR: f64 = 1e-10;
/// Minimum observed order for the dt sweep.
pub const DT_MIN_ORDER: f64 = 1.7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepDimension {
    Epsilon,
    Dt,
    N,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepLevel {
    pub value: f64,
    /// distance to the next refinement (`ε/2`, `dt/2`, or the next `n`)
    pub distance: f64,
    /// `log(d_k / d_{k+1}) / log(h_k / h_{k+1})`, absent on the last level
    pub order: Option<f64>,
    pub windows: usize,
    pub picard_iters: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub dimension: SweepDimension,
    pub levels: Vec<SweepLevel>,
    pub pass: bool,
}

fn iters(t: &Trajectory) -> usize {
    t.windows.iter().map(|w| w.certificate.iterations).sum()
}

/// `L²` distance of the total fields at the final node, both resampled onto `g`.
fn final_distance_on(g: &Grid, a: &Trajectory, b: &Trajectory) -> Result<f64> {
    let at = |t: &Trajectory| -> Result<_> { Ok((t.total_v(t.steps()).resample(g)?, t.total_h(t.steps()).resample(g)?)) };
    let ((av, ah), (bv, bh)) = (at(a)?, at(b)?);
    Ok((av.try_sub(&bv)?.l2_norm_sqr() + ah.try_sub(&bh)?.l2_norm_sqr()).sqrt())
}

fn orders(values: &[f64], distances: &[f64]) -> Vec<Option<f64>> {
    (0..values.len())
        .map(|k| {
            let (d0, d1) = (distances[k], *distances.get(k + 1)?);
            if d0 > 0.0 && d1 > 0.0 {
                Some((d0 / d1).ln() / (values[k] / values[k + 1]).ln().abs())
            } else {
                None
            }
        })
        .collect()
}

/// Refines the configured run along `dimension` and tabulates distances
/// between successive refinements, writing `sweep.csv` and `sweep.json`.
///
/// `epsilon` and `dt` levels must decrease; each is compared against its half.
/// `n` levels must increase; data is built on the coarsest grid and resampled,
/// and distances are taken on the coarsest grid between consecutive levels.
pub fn sweep(config: &RunConfig, dimension: SweepDimension, levels: &[f64], out: &Path, execution: Execution) -> Result<SweepTable> {
    config.validate()?;
    if levels.len() < 3 {
        return Err(Error::Config("a sweep needs at least three levels".into()));
    }
    let grid = config.grid()?;
    let params = config.params(execution);
    let rows: Vec<(f64, f64, usize, usize)>;
    let pass;
    match dimension {
        SweepDimension::Epsilon => {
            let (v0, h0) = config.initial_data(&grid)?;
            let rep = epsilon_sweep(&v0, &h0, &params, levels).map_err(|e| match e {
                Error::InvalidArgument(m) => Error::Config(m),
                e => e,
            })?;
            rows = rep.rows.iter().map(|r| (r.epsilon, r.distance, r.windows, r.picard_iters)).collect();
            pass = rep.pass;
        }
        SweepDimension::Dt => {
            if levels.windows(2).any(|w| w[1] >= w[0]) || levels.iter().any(|&d| !(d > 0.0)) {
                return Err(Error::Config("dt levels must be positive and strictly decreasing".into()));
            }
            let (v0, h0) = config.initial_data(&grid)?;
            let solve = |dt: f64| solve_trajectory(&v0, &h0, &crate::scheme::SchemeParams { dt, ..params.clone() });
            let mut r = Vec::new();
            for &dt in levels {
                let (a, b) = (solve(dt)?, solve(dt / 2.0)?);
                r.push((dt, final_distance_on(&grid, &a, &b)?, a.windows.len(), iters(&a)));
            }
            let dist: Vec<f64> = r.iter().map(|x| x.1).collect();
            let ords = orders(levels, &dist);
            pass = ords.iter().flatten().count() + 1 == levels.len() && ords.iter().flatten().all(|&o| o >= DT_MIN_ORDER);
            rows = r;
        }
        SweepDimension::N => {
            if levels.windows(2).any(|w| w[1] <= w[0]) || levels.iter().any(|&n| n.fract() != 0.0 || n < 4.0) {
                return Err(Error::Config("n levels must be integers ≥ 4 and strictly increasing".into()));
            }
            let box_length = config.grid.box_length;
            let coarse = Grid::with_dealias(levels[0] as usize, box_length, config.scheme.dealias).map_err(|e| Error::Config(e.to_string()))?;
            let (v0, h0) = config.initial_data(&coarse)?;
            let runs = levels
                .iter()
                .map(|&n| {
                    let g = Grid::with_dealias(n as usize, box_length, config.scheme.dealias).map_err(|e| Error::Config(e.to_string()))?;
                    solve_trajectory(&v0.resample(&g)?, &h0.resample(&g)?, &params)
                })
                .collect::<Result<Vec<_>>>()?;
            let mut r = Vec::new();
            for k in 0..runs.len() - 1 {
                r.push((levels[k], final_distance_on(&coarse, &runs[k], &runs[k + 1])?, runs[k].windows.len(), iters(&runs[k])));
            }
            let last = runs.last().expect("three levels");
            r.push((*levels.last().expect("three levels"), f64::NAN, last.windows.len(), iters(last)));
            let finite: Vec<f64> = r.iter().map(|x| x.1).filter(|d| d.is_finite()).collect();
            pass = finite.iter().all(|&d| d <= N_SWEEP_FLOOR) || finite.windows(2).all(|w| w[1] < w[0]);
            rows = r;
        }
    }
    let values: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let dist: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let ords = orders(&values, &dist);
    let table = SweepTable {
        dimension,
        levels: rows
            .iter()
            .zip(ords)
            .map(|(r, order)| SweepLevel { value: r.0, distance: r.1, order: order.filter(|o| o.is_finite()), windows: r.2, picard_iters: r.3 })
            .collect(),
        pass,
    };
    std::fs::create_dir_all(out)?;
    write_csv(&out.join("sweep.csv"), &table.levels)?;
    write_json(&out.join("sweep.json"), &table)?;
    Ok(table)
}

#[derive(Serialize)]
struct StabilityCsvRow {
    t: f64,
    #[serde(rename = "D")]
    d: f64,
    dissipation: f64,
    g1: f64,
    g2: f64,
    envelope: f64,
}

#[derive(Serialize)]
struct DeltaVerdict {
    delta: f64,
    c_hat: f64,
    c_hat_lsq: f64,
    k: f64,
    sup_d: f64,
    pass: bool,
}

#[derive(Serialize)]
struct Verdict {
    deltas: Vec<DeltaVerdict>,
    c_hat_spread: f64,
    scaling_spread: f64,
    smallness: Vec<SmallnessRow>,
    pass: bool,
}

/// Perturbs the configured data by each size in `deltas`, writing one
/// `stability_<k>.csv` per size and `verdict.json`.
pub fn stability(config: &RunConfig, deltas: &[f64], seed: u64, out: &Path, execution: Execution) -> Result<StabilityStudy> {
    config.validate()?;
    if deltas.is_empty() || deltas.iter().any(|&d| !(d >= 0.0 && d.is_finite())) {
        return Err(Error::Config("perturbation sizes must be finite and nonnegative".into()));
    }
    let grid = config.grid()?;
    let params = config.params(execution);
    let (v0, h0) = config.initial_data(&grid)?;
    let study = stability_experiment(&v0, &h0, &params, deltas, seed)?;
    let smallness = smallness_window(&solve_trajectory(&v0, &h0, &params)?)?;
    std::fs::create_dir_all(out)?;
    for (k, rep) in study.reports.iter().enumerate() {
        let rows: Vec<StabilityCsvRow> = rep
            .rows
            .iter()
            .map(|r| StabilityCsvRow { t: r.t, d: r.d, dissipation: r.dissipation, g1: r.g1, g2: r.g2, envelope: r.envelope })
            .collect();
        write_csv(&out.join(format!("stability_{k}.csv")), &rows)?;
    }
    let verdict = Verdict {
        deltas: study
            .reports
            .iter()
            .map(|r| DeltaVerdict { delta: r.delta, c_hat: r.c_hat, c_hat_lsq: r.c_hat_lsq, k: r.k, sup_d: r.sup_d, pass: r.pass })
            .collect(),
        c_hat_spread: study.c_hat_spread,
        scaling_spread: study.scaling_spread,
        smallness,
        pass: study.pass,
    };
    write_json(&out.join("verdict.json"), &verdict)?;
    Ok(study)
}

fn num(v: &Value) -> String {
    v.as_f64().map(|x| format!("{x:.3e}")).unwrap_or_else(|| "-".into())
}

/// Renders `summary.json` in `dir` as markdown, writes `report.md` next to it
/// and returns the text.
pub fn report(dir: &Path) -> Result<String> {
    let text = std::fs::read_to_string(dir.join("summary.json"))?;
    let s: Value = serde_json::from_str(&text)?;
    let field = |v: &Value, k: &str| v.get(k).cloned().unwrap_or(Value::Null);
    let mut md = String::new();
    let verdict = if s["pass"].as_bool() == Some(true) { "PASS" } else { "FAIL" };
    let _ = writeln!(md, "# Run report: {verdict}\n");
    let cfg = field(&s, "config");
    let _ = writeln!(
        md,
        "n = {}, ε = {}, dt = {}, T = {}, preset = {}, amplitude = {}\n",
        cfg["grid"]["n"], cfg["scheme"]["epsilon"], cfg["scheme"]["dt"], cfg["scheme"]["horizon"], cfg["initial"]["preset"], cfg["initial"]["amplitude"]
    );
    let _ = writeln!(md, "calibration `{}`, seam jump {}\n", s["calibration_hash"].as_str().unwrap_or("-"), num(&s["seam_jump"]));
    let _ = writeln!(md, "## Windows\n\n| start | steps | halvings | iterations | residual | γ |\n|---|---|---|---|---|---|");
    for w in s["windows"].as_array().into_iter().flatten() {
        let c = &w["certificate"];
        let _ = writeln!(
            md,
            "| {} | {} | {} | {} | {} | {} |",
            w["start_node"],
            w["steps"],
            w["halvings"],
            c["iterations"],
            num(&c["final_residual"]),
            num(&c["gamma"])
        );
    }
    let _ = writeln!(md, "\n## Audits\n\n| audit | worst / threshold | verdict |\n|---|---|---|");
    for a in s["audits"].as_array().into_iter().flatten() {
        let ok = if a["pass"].as_bool() == Some(true) { "pass" } else { "FAIL" };
        let _ = writeln!(md, "| {} | {} | {ok} |", a["name"].as_str().unwrap_or("-"), num(&a["worst_ratio"]));
    }
    std::fs::write(dir.join("report.md"), &md)?;
    Ok(md)
}
