//! Grid-level constants for inequalities whose constants are only known to exist.
//!
//! Every constant is the maximum of the relevant ratio over a fixed seeded
//! corpus, multiplied by [`SAFETY`]. Fits for the common grids are frozen in
//! `calibration.json`; any other grid is fitted on first use with the same
//! routine. [`Calibration::hash`] identifies a table in run summaries.

use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::caloric::heat_flow;
use crate::error::Result;
use crate::spectral::norms::{gradient_lp_norm, lp_norm_samples, sobolev_seminorm, LpNorm, Sobolev};
use crate::spectral::ops::gradient_physical;
use crate::spectral::snapshot::sha256_hex;
use crate::spectral::random::{random_divfree_field, taylor_green, taylor_green_shifted};
use crate::spectral::{Dealias, Grid, VectorField};
use crate::verify::oscillation::{box_terms, sub_boxes, PART_EXPONENTS};

pub const CALIBRATION_VERSION: &str = "1";
pub const SAFETY: f64 = 1.25;
pub const CORPUS_SEEDS: [u64; 5] = [11, 23, 37, 41, 53];
pub const CORPUS_DECAYS: [f64; 4] = [0.5, 1.0, 2.0, 3.0];
/// `(l, s)` pairs with `3/s + 2/l = 4` fitted by default.
pub const NONLINEAR_PAIRS: [(f64, f64); 3] = [(1.5, 9.0 / 8.0), (4.0 / 3.0, 6.0 / 5.0), (2.0, 1.0)];

const FROZEN: &str = include_str!("calibration.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonlinearConstant {
    pub l: f64,
    pub s: f64,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub version: String,
    pub n: usize,
    pub box_length: f64,
    pub dealias: Dealias,
    pub safety: f64,
    /// `‖f‖_{10/3} ≤ C ‖f‖_2^{2/5} ‖∇f‖_2^{3/5}`
    pub interpolation: f64,
    /// `‖f‖_4 ≤ C ‖f‖_3`
    pub embed_l3_l4: f64,
    /// `‖f‖_5 ≤ C ‖f‖_3`
    pub embed_l3_l5: f64,
    /// `t^{5/8} ‖∇ e^{tΔ} f‖_4 ≤ C ‖f‖_3` for `t ∈ [0.01, 1]`
    pub heat_gradient_l4: f64,
    /// `‖u·∇u‖_s ≤ C ‖u‖_2^{2-2/l} ‖∇u‖_2^{2/l}`
    pub nonlinear: Vec<NonlinearConstant>,
    /// sub-box Sobolev-Poincaré constant per pressure part
    pub oscillation: [f64; 4],
}

impl Calibration {
    pub fn matches(&self, grid: &Grid) -> bool {
        self.n == grid.n() && self.box_length == grid.box_length() && self.dealias == grid.dealias()
    }

    pub fn nonlinear_constant(&self, l: f64, s: f64) -> Option<f64> {
        self.nonlinear.iter().find(|c| (c.l - l).abs() < 1e-12 && (c.s - s).abs() < 1e-12).map(|c| c.c)
    }

    /// sha256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        sha256_hex(serde_json::to_string(self).expect("calibration serializes").as_bytes())
    }
}

/// Vector fields the constants are fitted on.
pub fn corpus(grid: &Grid) -> Result<Vec<VectorField>> {
    let mut out = Vec::new();
    for &seed in &CORPUS_SEEDS {
        for &decay in &CORPUS_DECAYS {
            out.push(random_divfree_field(grid, seed, 1.0, decay)?);
        }
    }
    out.push(taylor_green(grid, 1.0));
    out.push(taylor_green_shifted(grid, 1.0));
    let s = 2.0 * std::f64::consts::PI / grid.box_length();
    out.push(VectorField::from_fn(grid, |x| [0.0, 0.0, (s * (x[0] + x[1])).sin()]));
    Ok(out)
}

/// Corpus plus two heat-smoothed copies of each member.
fn extended_corpus(grid: &Grid) -> Result<Vec<VectorField>> {
    let base = corpus(grid)?;
    let mut out = base.clone();
    for f in &base {
        out.push(heat_flow(f, 0.1)?);
        out.push(heat_flow(f, 1.0)?);
    }
    Ok(out)
}

fn heat_times() -> Vec<f64> {
    (0..12).map(|i| 0.01 * 100f64.powf(i as f64 / 11.0)).collect()
}

/// `‖u·∇u‖_s / (‖u‖_2^{2-2/l} ‖∇u‖_2^{2/l})` for one field.
pub fn nonlinear_ratio(u: &VectorField, l: f64, s: f64) -> Result<f64> {
    let grid = u.grid();
    let up = u.to_physical();
    let g = gradient_physical(u);
    let mag = (0..grid.len()).map(|q| {
        let mut acc = 0.0;
        for i in 0..3 {
            let c = up[0][q] * g[i][0][q] + up[1][q] * g[i][1][q] + up[2][q] * g[i][2][q];
            acc += c * c;
        }
        acc.sqrt()
    });
    let num = lp_norm_samples(mag, grid.cell_volume(), s);
    let alpha = 2.0 / l - 1.0;
    let den = u.l2_norm().powf(1.0 - alpha) * sobolev_seminorm(u, Sobolev::Dot1).powf(1.0 + alpha);
    Ok(if den > 0.0 { num / den } else { 0.0 })
}

/// Fitted constant for one `(l, s)` pair on `grid`.
pub fn fit_nonlinear(grid: &Grid, l: f64, s: f64) -> Result<f64> {
    let mut worst = 0.0f64;
    for f in extended_corpus(grid)? {
        worst = worst.max(nonlinear_ratio(&f, l, s)?);
    }
    Ok(SAFETY * worst)
}

/// Runs every fit on `grid`.
pub fn fit(grid: &Grid) -> Result<Calibration> {
    let fields = extended_corpus(grid)?;
    let (mut interp, mut e34, mut e35) = (0.0f64, 0.0f64, 0.0f64);
    for f in &fields {
        let (l2, h1) = (f.l2_norm(), sobolev_seminorm(f, Sobolev::Dot1));
        if l2 == 0.0 {
            continue;
        }
        let l3 = f.lp_norm(3.0)?;
        interp = interp.max(f.lp_norm(10.0 / 3.0)? / (l2.powf(0.4) * h1.powf(0.6)));
        e34 = e34.max(f.lp_norm(4.0)? / l3);
        e35 = e35.max(f.lp_norm(5.0)? / l3);
    }
    let mut heat = 0.0f64;
    for f in corpus(grid)? {
        let l3 = f.lp_norm(3.0)?;
        for t in heat_times() {
            heat = heat.max(t.powf(0.625) * gradient_lp_norm(&heat_flow(&f, t)?, 4.0)? / l3);
        }
    }
    let mut nonlinear = Vec::new();
    for &(l, s) in &NONLINEAR_PAIRS {
        let mut worst = 0.0f64;
        for f in &fields {
            worst = worst.max(nonlinear_ratio(f, l, s)?);
        }
        nonlinear.push(NonlinearConstant { l, s, c: SAFETY * worst });
    }
    let mut osc = [0.0f64; 4];
    let lbox = grid.box_length();
    for r in [lbox / 8.0, lbox / 4.0, lbox / 2.0] {
        let Ok(boxes) = sub_boxes(grid, r) else { continue };
        for f in &fields {
            for d in 0..3 {
                let u = f.scalar(d);
                for (i, &(a, s)) in PART_EXPONENTS.iter().enumerate() {
                    for (lhs, rhs) in box_terms(&u, &boxes, s) {
                        if rhs > 0.0 {
                            osc[i] = osc[i].max(lhs / (r.powf(a) * rhs));
                        }
                    }
                }
            }
        }
    }
    Ok(Calibration {
        version: CALIBRATION_VERSION.to_string(),
        n: grid.n(),
        box_length: grid.box_length(),
        dealias: grid.dealias(),
        safety: SAFETY,
        interpolation: SAFETY * interp,
        embed_l3_l4: SAFETY * e34,
        embed_l3_l5: SAFETY * e35,
        heat_gradient_l4: SAFETY * heat,
        nonlinear,
        oscillation: osc.map(|c| SAFETY * c),
    })
}

/// The frozen tables shipped with the crate.
pub fn frozen() -> Vec<Calibration> {
    serde_json::from_str(FROZEN).expect("calibration.json is valid")
}

fn cache() -> &'static Mutex<Vec<Calibration>> {
    static CACHE: OnceLock<Mutex<Vec<Calibration>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(frozen()))
}

/// Constants for `grid`: the frozen table if there is one, else a fresh fit.
pub fn for_grid(grid: &Grid) -> Result<Calibration> {
    if let Some(c) = cache().lock().expect("calibration cache").iter().find(|c| c.matches(grid)) {
        return Ok(c.clone());
    }
    let fitted = fit(grid)?;
    cache().lock().expect("calibration cache").push(fitted.clone());
    Ok(fitted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-9 * a.abs().max(b.abs())
    }

    #[test]
    fn frozen_tables_reproduce() {
        let tables = frozen();
        assert!(!tables.is_empty());
        for t in &tables {
            assert_eq!(t.version, CALIBRATION_VERSION);
            if t.n > 16 {
                continue;
            }
            let grid = Grid::with_dealias(t.n, t.box_length, t.dealias).unwrap();
            let f = fit(&grid).unwrap();
            assert!(close(f.interpolation, t.interpolation));
            assert!(close(f.embed_l3_l4, t.embed_l3_l4));
            assert!(close(f.embed_l3_l5, t.embed_l3_l5));
            assert!(close(f.heat_gradient_l4, t.heat_gradient_l4));
            for (a, b) in f.nonlinear.iter().zip(&t.nonlinear) {
                assert!(close(a.c, b.c));
            }
            for i in 0..4 {
                assert!(close(f.oscillation[i], t.oscillation[i]));
            }
        }
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let g = Grid::new(8, 2.0 * PI).unwrap();
        let a = for_grid(&g).unwrap();
        assert_eq!(a.hash(), for_grid(&g).unwrap().hash());
        let mut b = a.clone();
        b.interpolation *= 1.0 + 1e-15;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn interpolation_constant_holds_on_fresh_fields() {
        let g = Grid::new(16, 2.0 * PI).unwrap();
        let c = for_grid(&g).unwrap().interpolation;
        for seed in 0..100u64 {
            let decay = 0.25 + (seed % 7) as f64 * 0.5;
            let f = random_divfree_field(&g, 10_000 + seed, 1.0, decay).unwrap();
            let ratio = f.lp_norm(10.0 / 3.0).unwrap()
                / (f.l2_norm().powf(0.4) * sobolev_seminorm(&f, Sobolev::Dot1).powf(0.6));
            assert!(ratio <= c, "seed {seed}: {ratio} > {c}");
        }
    }

    #[test]
    fn heat_gradient_constant_survives_refinement() {
        let coarse = for_grid(&Grid::new(16, 2.0 * PI).unwrap()).unwrap().heat_gradient_l4;
        for n in [16, 32] {
            let g = Grid::new(n, 2.0 * PI).unwrap();
            for seed in [5u64, 6, 7] {
                let v0 = random_divfree_field(&g, 500 + seed, 1.0, 1.0).unwrap();
                let l3 = v0.lp_norm(3.0).unwrap();
                for t in heat_times() {
                    let q = t.powf(0.625) * gradient_lp_norm(&heat_flow(&v0, t).unwrap(), 4.0).unwrap() / l3;
                    assert!(q <= coarse, "n={n} t={t}: {q} > {coarse}");
                }
            }
        }
    }

    #[test]
    fn free_pair_is_exact() {
        // (l, s) = (2, 1): ‖u·∇u‖_1 ≤ ‖u‖_2 ‖∇u‖_2 with constant 1
        let g = Grid::new(8, 2.0 * PI).unwrap();
        let c = for_grid(&g).unwrap().nonlinear_constant(2.0, 1.0).unwrap();
        assert!(c <= SAFETY * (1.0 + 1e-12));
    }
}
