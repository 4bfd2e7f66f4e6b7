//! The Leray-mollified MHD perturbation system in mild form.
//!
//! With caloric parts `v1, H1` fixed, the perturbation `u = (v2, H2)` solves
//!
//! ```text
//! v2 = -∫ e^{(t-s)Δ} ℙ[(η*v2)·∇v2 - (η*H2)·∇H2 + cross(v1,H1,u) + v1·∇v1 - H1·∇H1] ds
//! H2 = -∫ e^{(t-s)Δ} ℙ[(η*v2)·∇H2 - (η*H2)·∇v2 + cross(v1,H1,u) + v1·∇H1 - H1·∇v1] ds
//! ```
//!
//! which is `u = B(u,u) + L(u) + R` on trajectories. The mollifier acts on
//! the transporting field only, so the transport terms drop out of the energy
//! balance. Windows are solved by certified Picard iteration and chained by
//! re-splitting the total field at each seam.

mod export;
mod pressure;

pub use export::{export_trajectory, import_trajectory, TrajectoryManifest};
pub use pressure::{
    momentum_residual, poisson_residual, pressure_decompose, pressure_from_totals, recover_pressure, PressureDecomposition,
    StokesRow, STOKES_PAIRS,
};

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::calibration;
use crate::caloric::{caloric_pair, duhamel_projected, CaloricPair, TimeGrid};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::fixedpoint::{check_condition, solve, FixedPointCertificate, ProbeReport, QuadraticMap, QuadraticProblem};
use crate::spectral::field::ensure_same;
use crate::spectral::norms::time_norm;
use crate::spectral::ops::{accumulate_transport, gradient_physical, to_spectral_dealiased};
use crate::spectral::random::random_divfree_field;
use crate::spectral::{leray_project, mollify, xt_norm, Grid, MollifierKind, VectorField};

/// Slack on the discrete Duhamel bound `sup‖U‖ + ‖∇U‖_{L²L²} ≤ (1 + 1/√2)‖g‖_{L²Ḣ⁻¹}`.
pub const DUHAMEL_CONSTANT: f64 = 1.05 * (1.0 + std::f64::consts::FRAC_1_SQRT_2);

const PROBE_SEED: u64 = 0x5eed_0000;
/// Caloric samples and gradients are cached per window below this many bytes.
const BACKGROUND_BUDGET: usize = 1 << 28;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WindowPolicy {
    /// Start from the whole remaining horizon and halve until the contraction condition holds.
    #[default]
    Automatic,
    /// Windows of exactly this length; failure of the condition is an error.
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchemeParams {
    pub epsilon: f64,
    pub horizon: f64,
    pub dt: f64,
    pub picard_tol: f64,
    pub max_picard_iters: usize,
    pub window_policy: WindowPolicy,
    pub mollifier: MollifierKind,
    /// random pairs used to spot-check `c1` and `c2` before iterating
    pub probes: usize,
    #[serde(skip)]
    pub execution: Execution,
}

impl Default for SchemeParams {
    fn default() -> Self {
        Self {
            epsilon: 0.5,
            horizon: 0.25,
            dt: 1.0 / 64.0,
            picard_tol: 1e-10,
            max_picard_iters: 200,
            window_policy: WindowPolicy::Automatic,
            mollifier: MollifierKind::Gaussian,
            probes: 2,
            execution: Execution::default(),
        }
    }
}

impl SchemeParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if !(self.dt > 0.0 && self.dt < self.horizon) || !self.horizon.is_finite() {
            return bad(format!("need 0 < dt < horizon, got dt = {} and horizon = {}", self.dt, self.horizon));
        }
        if !(self.picard_tol > 0.0) {
            return bad(format!("picard_tol must be positive, got {}", self.picard_tol));
        }
        if self.max_picard_iters == 0 {
            return bad("max_picard_iters must be at least 1".into());
        }
        TimeGrid::covering(self.horizon, self.dt)?;
        if let WindowPolicy::Fixed(t) = self.window_policy {
            let w = TimeGrid::covering(t, self.dt)?;
            if w.steps < 2 {
                return bad(format!("fixed window {t} is shorter than two steps"));
            }
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }

    fn window_steps(&self, remaining: usize) -> usize {
        match self.window_policy {
            WindowPolicy::Automatic => remaining,
            WindowPolicy::Fixed(t) => ((t / self.dt).round() as usize).min(remaining),
        }
    }
}

/// The perturbation at one node.
#[derive(Debug, Clone)]
pub struct MhdState {
    pub v2: VectorField,
    pub h2: VectorField,
    pub t: f64,
}

/// A pair of node-sampled trajectories; the element space of the Picard map.
#[derive(Debug, Clone)]
pub struct PathPair {
    pub v: Vec<VectorField>,
    pub h: Vec<VectorField>,
}

impl PathPair {
    pub fn zeros(grid: &Grid, nodes: usize) -> Self {
        Self { v: vec![VectorField::zeros(grid); nodes], h: vec![VectorField::zeros(grid); nodes] }
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    /// `‖v‖_X + ‖H‖_X` with `‖u‖_X = sup‖u‖_{L²} + ‖∇u‖_{L²L²}`.
    pub fn x_norm(&self, dt: f64) -> f64 {
        xt_norm(&self.v, dt).unwrap_or(0.0) + xt_norm(&self.h, dt).unwrap_or(0.0)
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a.try_add(b))
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a.try_sub(b))
    }

    fn zip(&self, other: &Self, f: impl Fn(&VectorField, &VectorField) -> Result<VectorField>) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::NodeMismatch);
        }
        let v = self.v.iter().zip(&other.v).map(|(a, b)| f(a, b)).collect::<Result<_>>()?;
        let h = self.h.iter().zip(&other.h).map(|(a, b)| f(a, b)).collect::<Result<_>>()?;
        Ok(Self { v, h })
    }
}

type Phys = [Vec<f64>; 3];
type Grad = [[Vec<f64>; 3]; 3];

struct Background {
    v1: Phys,
    h1: Phys,
    gv1: Grad,
    gh1: Grad,
}

impl Background {
    fn at(cal: &CaloricPair, m: usize) -> Self {
        let (v, h) = (&cal.v1()[m], &cal.h1()[m]);
        Self { v1: v.to_physical(), h1: h.to_physical(), gv1: gradient_physical(v), gh1: gradient_physical(h) }
    }
}

fn add_phys(a: &Phys, b: &Phys) -> Phys {
    std::array::from_fn(|d| a[d].iter().zip(&b[d]).map(|(x, y)| x + y).collect())
}

/// `-ℙ Σ sign · a·∇w`, dealiased.
fn forcing(grid: &Grid, terms: &[(f64, &Phys, &Grad)]) -> VectorField {
    let mut out = [vec![0.0; grid.len()], vec![0.0; grid.len()], vec![0.0; grid.len()]];
    for &(sign, a, g) in terms {
        accumulate_transport(&mut out, -sign, a, g);
    }
    leray_project(&to_spectral_dealiased(grid, out))
}

/// The mild-form map of one window.
pub struct MhdMap<'a> {
    cal: &'a CaloricPair,
    epsilon: f64,
    kind: MollifierKind,
    exec: Execution,
    background: Option<Vec<Background>>,
    source: OnceLock<PathPair>,
}

impl<'a> MhdMap<'a> {
    pub fn new(cal: &'a CaloricPair, params: &SchemeParams) -> Self {
        let nodes = cal.time().len();
        let bytes = nodes * cal.grid().len() * 24 * std::mem::size_of::<f64>();
        let background = (bytes <= BACKGROUND_BUDGET && !cal.is_zero())
            .then(|| params.execution.map_range(nodes, |m| Background::at(cal, m)));
        Self { cal, epsilon: params.epsilon, kind: params.mollifier, exec: params.execution, background, source: OnceLock::new() }
    }

    pub fn dt(&self) -> f64 {
        self.cal.time().dt
    }

    fn grid(&self) -> &Grid {
        self.cal.grid()
    }

    fn with_background<R>(&self, m: usize, f: impl FnOnce(&Background) -> R) -> R {
        match &self.background {
            Some(bg) => f(&bg[m]),
            None => f(&Background::at(self.cal, m)),
        }
    }

    fn mollified(&self, f: &VectorField) -> Phys {
        mollify(f, self.epsilon, self.kind).expect("epsilon validated").to_physical()
    }

    /// Integrates per-node forcing pairs in time.
    fn integrate(&self, forcing: Vec<(VectorField, VectorField)>) -> PathPair {
        let (gv, gh): (Vec<_>, Vec<_>) = forcing.into_iter().unzip();
        let dt = self.dt();
        PathPair { v: duhamel_projected(&gv, dt).expect("nonempty"), h: duhamel_projected(&gh, dt).expect("nonempty") }
    }

    fn nodes(&self) -> usize {
        self.cal.time().len()
    }
}

impl QuadraticMap for MhdMap<'_> {
    type Elem = PathPair;

    fn zero(&self) -> PathPair {
        PathPair::zeros(self.grid(), self.nodes())
    }

    fn norm(&self, u: &PathPair) -> f64 {
        u.x_norm(self.dt())
    }

    fn distance(&self, a: &PathPair, b: &PathPair) -> f64 {
        a.try_sub(b).expect("same shape").x_norm(self.dt())
    }

    fn bilinear(&self, a: &PathPair, b: &PathPair) -> PathPair {
        let grid = self.grid();
        let per_node = self.exec.map_range(self.nodes(), |m| {
            let (av, ah) = (self.mollified(&a.v[m]), self.mollified(&a.h[m]));
            let (gbv, gbh) = (gradient_physical(&b.v[m]), gradient_physical(&b.h[m]));
            (
                forcing(grid, &[(1.0, &av, &gbv), (-1.0, &ah, &gbh)]),
                forcing(grid, &[(1.0, &av, &gbh), (-1.0, &ah, &gbv)]),
            )
        });
        self.integrate(per_node)
    }

    fn linear(&self, a: &PathPair) -> PathPair {
        if self.cal.is_zero() {
            return self.zero();
        }
        let grid = self.grid();
        let per_node = self.exec.map_range(self.nodes(), |m| {
            let (av, ah) = (a.v[m].to_physical(), a.h[m].to_physical());
            let (gav, gah) = (gradient_physical(&a.v[m]), gradient_physical(&a.h[m]));
            self.with_background(m, |bg| {
                (
                    forcing(grid, &[(1.0, &bg.v1, &gav), (-1.0, &bg.h1, &gah), (1.0, &av, &bg.gv1), (-1.0, &ah, &bg.gh1)]),
                    forcing(grid, &[(1.0, &bg.v1, &gah), (-1.0, &bg.h1, &gav), (1.0, &av, &bg.gh1), (-1.0, &ah, &bg.gv1)]),
                )
            })
        });
        self.integrate(per_node)
    }

    fn source(&self) -> PathPair {
        self.source
            .get_or_init(|| {
                if self.cal.is_zero() {
                    return self.zero();
                }
                let grid = self.grid();
                let per_node = self.exec.map_range(self.nodes(), |m| {
                    self.with_background(m, |bg| {
                        (
                            forcing(grid, &[(1.0, &bg.v1, &bg.gv1), (-1.0, &bg.h1, &bg.gh1)]),
                            forcing(grid, &[(1.0, &bg.v1, &bg.gh1), (-1.0, &bg.h1, &bg.gv1)]),
                        )
                    })
                });
                self.integrate(per_node)
            })
            .clone()
    }

    fn sum(&self, parts: &[PathPair]) -> PathPair {
        let mut acc = parts[0].clone();
        for p in &parts[1..] {
            for (a, b) in acc.v.iter_mut().zip(&p.v).chain(acc.h.iter_mut().zip(&p.h)) {
                a.axpy(1.0, b);
            }
        }
        acc
    }

    /// One pass over the nodes: `(η*v2 + v1)` and `(η*H2 + H1)` transport
    /// `(v2, H2)`, and `(v2, H2)` transports `(v1, H1)`.
    fn apply(&self, u: &PathPair) -> PathPair {
        if self.cal.is_zero() {
            return self.bilinear(u, u);
        }
        let per_node = self.exec.map_range(self.nodes(), |m| self.node_forcing(u, m, false));
        let out = self.integrate(per_node);
        self.sum(&[out, self.source()])
    }
}

impl MhdMap<'_> {
    /// Projected forcing of `B(u,u) + L(u)` at node `m`, plus that of `R` when `with_source`.
    pub(crate) fn node_forcing(&self, u: &PathPair, m: usize, with_source: bool) -> (VectorField, VectorField) {
        let grid = self.grid();
        let (mut uv, mut uh) = (u.v[m].to_physical(), u.h[m].to_physical());
        let (guv, guh) = (gradient_physical(&u.v[m]), gradient_physical(&u.h[m]));
        let (av, ah) = (self.mollified(&u.v[m]), self.mollified(&u.h[m]));
        self.with_background(m, |bg| {
            let (tv, th) = (add_phys(&av, &bg.v1), add_phys(&ah, &bg.h1));
            if with_source {
                uv = add_phys(&uv, &bg.v1);
                uh = add_phys(&uh, &bg.h1);
            }
            (
                forcing(grid, &[(1.0, &tv, &guv), (-1.0, &th, &guh), (1.0, &uv, &bg.gv1), (-1.0, &uh, &bg.gh1)]),
                forcing(grid, &[(1.0, &tv, &guh), (-1.0, &th, &guv), (1.0, &uv, &bg.gh1), (-1.0, &uh, &bg.gv1)]),
            )
        })
    }
}

/// `R`: the response to the caloric self-interaction alone.
pub fn assemble_source(cal: &CaloricPair, params: &SchemeParams) -> PathPair {
    MhdMap::new(cal, params).source()
}

fn check_shape(cal: &CaloricPair, a: &PathPair) -> Result<()> {
    if a.v.len() != cal.time().len() || a.h.len() != cal.time().len() {
        return Err(Error::NodeMismatch);
    }
    for f in a.v.iter().chain(&a.h) {
        ensure_same(cal.grid(), f.grid())?;
    }
    Ok(())
}

/// `B(a, b)`.
pub fn bilinear_apply(cal: &CaloricPair, params: &SchemeParams, a: &PathPair, b: &PathPair) -> Result<PathPair> {
    check_shape(cal, a)?;
    check_shape(cal, b)?;
    Ok(MhdMap::new(cal, params).bilinear(a, b))
}

/// `L(a)`.
pub fn linear_apply(cal: &CaloricPair, params: &SchemeParams, a: &PathPair) -> Result<PathPair> {
    check_shape(cal, a)?;
    Ok(MhdMap::new(cal, params).linear(a))
}

/// Bound constants of one window and the pieces they are built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeConstants {
    pub c1: f64,
    pub c2: f64,
    pub r_norm: f64,
    pub duhamel: f64,
    /// bound on `‖η_ε * a‖_{L∞} / ‖a‖_{L²}`
    pub kernel: f64,
    pub interpolation: f64,
    pub v1_l5l5: f64,
    pub h1_l5l5: f64,
    pub calibration_hash: String,
}

/// `max(‖η‖_{L²(ℝ³)} ε^{-3/2}, (Σ_k η̂(εk)² / L³)^{1/2})`, the latter being the
/// exact sup bound for the periodized kernel on the retained band.
pub fn kernel_bound(grid: &Grid, epsilon: f64, kind: MollifierKind) -> f64 {
    let continuous = kind.kernel_l2_norm() * epsilon.powf(-1.5);
    let sum: f64 = (0..grid.len())
        .filter(|&i| grid.retained(i))
        .map(|i| kind.multiplier(epsilon, grid.k_vec(i)).powi(2))
        .sum();
    continuous.max((sum / grid.volume()).sqrt())
}

fn constants_for(map: &MhdMap<'_>, cal: &CaloricPair, params: &SchemeParams) -> Result<SchemeConstants> {
    let cal_table = calibration::for_grid(cal.grid())?;
    let time = cal.time();
    let l5 = cal.decay_for(5.0).expect("L5 norms are tabulated");
    let v1_l5l5 = time_norm(&l5.v1, time.dt, 5.0)?;
    let h1_l5l5 = time_norm(&l5.h1, time.dt, 5.0)?;
    let kernel = kernel_bound(cal.grid(), params.epsilon, params.mollifier);
    let c1 = 2.0 * DUHAMEL_CONSTANT * kernel * time.horizon().sqrt();
    let c2 = 2.0 * DUHAMEL_CONSTANT * cal_table.interpolation * (v1_l5l5 + h1_l5l5);
    let r_norm = map.norm(&map.source());
    Ok(SchemeConstants {
        c1,
        c2,
        r_norm,
        duhamel: DUHAMEL_CONSTANT,
        kernel,
        interpolation: cal_table.interpolation,
        v1_l5l5,
        h1_l5l5,
        calibration_hash: cal_table.hash(),
    })
}

/// `c1 = 2 C_d K(ε) √T`, `c2 = 2 C_d C_I (‖v1‖_{L⁵L⁵} + ‖H1‖_{L⁵L⁵})`, `r_norm = ‖R‖_X`.
pub fn estimate_constants(cal: &CaloricPair, params: &SchemeParams) -> Result<SchemeConstants> {
    let map = MhdMap::new(cal, params);
    constants_for(&map, cal, params)
}

/// One solved window. Node `m` of the window is global node `start_node + m`.
#[derive(Debug, Clone)]
pub struct Window {
    pub start_node: usize,
    pub cal: CaloricPair,
    pub v2: Vec<VectorField>,
    pub h2: Vec<VectorField>,
    pub constants: SchemeConstants,
    pub certificate: FixedPointCertificate,
    pub probes: ProbeReport,
    /// how often the requested window was halved
    pub halvings: usize,
}

impl Window {
    pub fn steps(&self) -> usize {
        self.cal.time().steps
    }

    pub fn dt(&self) -> f64 {
        self.cal.time().dt
    }

    pub fn perturbation(&self) -> PathPair {
        PathPair { v: self.v2.clone(), h: self.h2.clone() }
    }

    pub fn state(&self, m: usize) -> MhdState {
        MhdState { v2: self.v2[m].clone(), h2: self.h2[m].clone(), t: (self.start_node + m) as f64 * self.dt() }
    }

    pub fn total_v(&self, m: usize) -> VectorField {
        &self.cal.v1()[m] + &self.v2[m]
    }

    pub fn total_h(&self, m: usize) -> VectorField {
        &self.cal.h1()[m] + &self.h2[m]
    }

    pub fn x_norm(&self) -> f64 {
        self.perturbation().x_norm(self.dt())
    }
}

/// A chain of windows on a common uniform time grid.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub params: SchemeParams,
    pub windows: Vec<Window>,
}

impl Trajectory {
    pub fn grid(&self) -> &Grid {
        self.windows[0].cal.grid()
    }

    pub fn steps(&self) -> usize {
        self.windows.iter().map(Window::steps).sum()
    }

    pub fn dt(&self) -> f64 {
        self.params.dt
    }

    pub fn horizon(&self) -> f64 {
        self.steps() as f64 * self.dt()
    }

    pub fn time(&self) -> TimeGrid {
        TimeGrid { steps: self.steps(), dt: self.dt() }
    }

    /// Window holding global node `m`; a seam node belongs to the later window.
    pub fn locate(&self, m: usize) -> (usize, usize) {
        for (w, win) in self.windows.iter().enumerate().rev() {
            if m >= win.start_node {
                return (w, m - win.start_node);
            }
        }
        (0, m)
    }

    pub fn total_v(&self, m: usize) -> VectorField {
        let (w, k) = self.locate(m);
        self.windows[w].total_v(k)
    }

    pub fn total_h(&self, m: usize) -> VectorField {
        let (w, k) = self.locate(m);
        self.windows[w].total_h(k)
    }

    pub fn certificates(&self) -> Vec<&FixedPointCertificate> {
        self.windows.iter().map(|w| &w.certificate).collect()
    }

    /// Largest `L²` jump of the total fields across window seams.
    pub fn seam_jump(&self) -> f64 {
        self.windows
            .windows(2)
            .map(|p| {
                let (a, b) = (&p[0], &p[1]);
                let end = a.steps();
                (&a.total_v(end) - &b.total_v(0)).l2_norm().max((&a.total_h(end) - &b.total_h(0)).l2_norm())
            })
            .fold(0.0, f64::max)
    }
}

fn probe_pairs(grid: &Grid, time: TimeGrid, count: usize) -> Result<Vec<(PathPair, PathPair)>> {
    let path = |seed: u64| -> Result<PathPair> {
        let f = random_divfree_field(grid, seed, 1.0, 1.0)?;
        let g = random_divfree_field(grid, seed + 1, 1.0, 2.0)?;
        let horizon = time.horizon();
        let node = |m: usize, a: &VectorField, b: &VectorField| {
            let s = time.t(m) / horizon;
            let mut out = a.scaled(s);
            out.axpy(s * (1.0 - s), b);
            out
        };
        Ok(PathPair {
            v: (0..time.len()).map(|m| node(m, &f, &g)).collect(),
            h: (0..time.len()).map(|m| node(m, &g, &f)).collect(),
        })
    };
    (0..count as u64)
        .map(|i| Ok((path(PROBE_SEED + 4 * i)?, path(PROBE_SEED + 4 * i + 2)?)))
        .collect()
}

fn condition_holds(c: &SchemeConstants) -> Result<bool> {
    if c.c2 >= 1.0 {
        return Ok(false);
    }
    Ok(check_condition(c.c1, c.c2, c.r_norm)?.ok)
}

fn solve_from(v0: &VectorField, h0: &VectorField, params: &SchemeParams, steps: usize, start_node: usize) -> Result<Window> {
    let full = caloric_pair(v0, h0, TimeGrid::new(steps, params.dt)?)?;
    let mut try_steps = steps;
    let mut halvings = 0;
    let (cal, constants, source) = loop {
        if try_steps < 2 {
            return Err(Error::WindowCollapse { tried: halvings });
        }
        let cal = if try_steps == steps { full.clone() } else { full.truncated(try_steps) };
        let map = MhdMap::new(&cal, params);
        let constants = constants_for(&map, &cal, params)?;
        if condition_holds(&constants)? {
            let source = map.source();
            drop(map);
            break (cal, constants, source);
        }
        if let WindowPolicy::Fixed(_) = params.window_policy {
            return Err(Error::ConditionViolated { c1: constants.c1, c2: constants.c2, r_norm: constants.r_norm });
        }
        try_steps /= 2;
        halvings += 1;
    };
    let map = MhdMap::new(&cal, params);
    let _ = map.source.set(source);
    let problem = QuadraticProblem::new(map, constants.c1, constants.c2, constants.r_norm)?;
    let probes = if cal.is_zero() {
        ProbeReport::default()
    } else {
        problem.validate_on(&probe_pairs(cal.grid(), cal.time(), params.probes)?)?
    };
    let (u, certificate) = solve(&problem, params.picard_tol, params.max_picard_iters)?;
    drop(problem);
    Ok(Window { start_node, cal, v2: u.v, h2: u.h, constants, certificate, probes, halvings })
}

/// Solves the first window from `(v0, h0)`.
pub fn solve_window(v0: &VectorField, h0: &VectorField, params: &SchemeParams) -> Result<Trajectory> {
    params.validate()?;
    ensure_same(v0.grid(), h0.grid())?;
    if !v0.is_solenoidal() || !h0.is_solenoidal() {
        return Err(Error::InvalidArgument("initial data must be divergence-free".into()));
    }
    let window = solve_from(v0, h0, params, params.window_steps(params.steps()), 0)?;
    Ok(Trajectory { params: params.clone(), windows: vec![window] })
}

/// Continues `traj` to `new_horizon`, re-splitting the total field at each seam.
pub fn extend(traj: &Trajectory, new_horizon: f64) -> Result<Trajectory> {
    let dt = traj.dt();
    let target = TimeGrid::covering(new_horizon, dt)?.steps;
    let mut out = traj.clone();
    while out.steps() < target {
        let last = out.windows.last().expect("trajectory has a window");
        let end = last.steps();
        let (v, h) = (last.total_v(end), last.total_h(end));
        let steps = out.params.window_steps(target - out.steps());
        let window = solve_from(&v, &h, &out.params, steps, out.steps())?;
        out.windows.push(window);
    }
    out.params.horizon = out.params.horizon.max(out.horizon());
    Ok(out)
}

/// Solves on `[0, params.horizon]` with as many windows as the policy needs.
pub fn solve_trajectory(v0: &VectorField, h0: &VectorField, params: &SchemeParams) -> Result<Trajectory> {
    let first = solve_window(v0, h0, params)?;
    extend(&first, params.horizon)
}
