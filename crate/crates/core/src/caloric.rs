//! Heat semigroup, caloric extensions and Duhamel integration.
//!
//! Everything is a Fourier multiplier. The Duhamel integral is advanced by
//! the semigroup recursion
//!
//! ```text
//! U(t+h) = e^{hΔ} U(t) + ∫_t^{t+h} e^{(t+h-s)Δ} ℙg(s) ds
//! ```
//!
//! with the local integral taken exactly for `g` linear on the step
//! (exponential trapezoid, phi-function weights).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::spectral::field::ensure_same;
use crate::spectral::norms::{hessian_lp_norm, mixed_norm, time_norm, LpNorm};
use crate::spectral::ops::{gradient_part, leray_project};
use crate::spectral::{Grid, VectorField};

/// Uniform nodes `t_m = m dt`, `m = 0..=steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub steps: usize,
    pub dt: f64,
}

impl TimeGrid {
    pub fn new(steps: usize, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
        }
        Ok(Self { steps, dt })
    }

    /// Nodes covering `[0, horizon]`; the horizon must be a whole number of steps.
    pub fn covering(horizon: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !(horizon > 0.0) {
            return Err(Error::InvalidArgument(format!("need positive horizon and step, got T={horizon}, dt={dt}")));
        }
        let steps = (horizon / dt).round();
        if (steps * dt - horizon).abs() > 1e-9 * horizon {
            return Err(Error::InvalidArgument(format!("horizon {horizon} is not a multiple of dt {dt}")));
        }
        Self::new(steps as usize, dt)
    }

    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn horizon(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    pub fn t(&self, m: usize) -> f64 {
        m as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|m| self.t(m)).collect()
    }

    /// The first `steps` steps of this grid.
    pub fn truncated(&self, steps: usize) -> Self {
        Self { steps, dt: self.dt }
    }
}

/// `e^{tΔ} f`.
pub fn heat_flow(f: &VectorField, t: f64) -> Result<VectorField> {
    if t < 0.0 || t.is_nan() {
        return Err(Error::NegativeTime(t));
    }
    if t == 0.0 {
        return Ok(f.clone());
    }
    let grid = f.grid().clone();
    Ok(f.map_modes(|idx| (-t * grid.k2(idx)).exp()))
}

/// Lebesgue exponents whose decay is recorded on every caloric pair.
pub const DECAY_EXPONENTS: [f64; 4] = [2.0, 3.0, 4.0, 5.0];

/// Per-node `L^p` norms of one caloric component.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LpDecay {
    pub p: f64,
    pub v1: Vec<f64>,
    pub h1: Vec<f64>,
}

impl LpDecay {
    /// Non-increasing in time up to a relative quadrature slack of `1e-10`.
    pub fn is_monotone(&self) -> bool {
        let mono = |xs: &[f64]| xs.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-10) + 1e-300);
        mono(&self.v1) && mono(&self.h1)
    }
}

/// Heat flows `v1 = e^{tΔ}v0`, `H1 = e^{tΔ}h0` sampled on uniform nodes.
#[derive(Debug, Clone)]
pub struct CaloricPair {
    grid: Grid,
    time: TimeGrid,
    v0: VectorField,
    h0: VectorField,
    v1: Vec<VectorField>,
    h1: Vec<VectorField>,
    decay: Vec<LpDecay>,
}

pub fn caloric_pair(v0: &VectorField, h0: &VectorField, time: TimeGrid) -> Result<CaloricPair> {
    ensure_same(v0.grid(), h0.grid())?;
    if !v0.is_solenoidal() || !h0.is_solenoidal() {
        return Err(Error::InvalidArgument("caloric data must be divergence-free".into()));
    }
    let nodes = Execution::default().map_range(time.len(), |m| {
        let t = time.t(m);
        (heat_flow(v0, t).expect("t >= 0"), heat_flow(h0, t).expect("t >= 0"))
    });
    let (v1, h1): (Vec<_>, Vec<_>) = nodes.into_iter().unzip();
    let decay = DECAY_EXPONENTS
        .iter()
        .map(|&p| LpDecay {
            p,
            v1: v1.iter().map(|f| f.lp_norm(p).expect("p >= 1")).collect(),
            h1: h1.iter().map(|f| f.lp_norm(p).expect("p >= 1")).collect(),
        })
        .collect();
    Ok(CaloricPair { grid: v0.grid().clone(), time, v0: v0.clone(), h0: h0.clone(), v1, h1, decay })
}

impl CaloricPair {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn time(&self) -> TimeGrid {
        self.time
    }

    pub fn v0(&self) -> &VectorField {
        &self.v0
    }

    pub fn h0(&self) -> &VectorField {
        &self.h0
    }

    pub fn v1(&self) -> &[VectorField] {
        &self.v1
    }

    pub fn h1(&self) -> &[VectorField] {
        &self.h1
    }

    pub fn decay(&self) -> &[LpDecay] {
        &self.decay
    }

    /// Norms of the caloric part at node `m` for exponent `p` in [`DECAY_EXPONENTS`].
    pub fn decay_for(&self, p: f64) -> Option<&LpDecay> {
        self.decay.iter().find(|d| d.p == p)
    }

    pub fn is_zero(&self) -> bool {
        self.v0.is_zero() && self.h0.is_zero()
    }

    /// Restriction to the first `steps` steps.
    pub fn truncated(&self, steps: usize) -> CaloricPair {
        let keep = steps + 1;
        CaloricPair {
            grid: self.grid.clone(),
            time: self.time.truncated(steps),
            v0: self.v0.clone(),
            h0: self.h0.clone(),
            v1: self.v1[..keep].to_vec(),
            h1: self.h1[..keep].to_vec(),
            decay: self
                .decay
                .iter()
                .map(|d| LpDecay { p: d.p, v1: d.v1[..keep].to_vec(), h1: d.h1[..keep].to_vec() })
                .collect(),
        }
    }
}

/// Forcing samples `g(t_m)` on uniform nodes.
#[derive(Debug, Clone)]
pub struct ForcedTrajectory {
    pub time: TimeGrid,
    pub g: Vec<VectorField>,
}

impl ForcedTrajectory {
    pub fn new(time: TimeGrid, g: Vec<VectorField>) -> Result<Self> {
        if g.is_empty() {
            return Err(Error::EmptyTrajectory);
        }
        if g.len() != time.len() {
            return Err(Error::NodeMismatch);
        }
        for f in &g[1..] {
            ensure_same(g[0].grid(), f.grid())?;
        }
        Ok(Self { time, g })
    }
}

/// `(1 - e^{-z}) / z`.
fn phi1(z: f64) -> f64 {
    if z < 1e-8 {
        1.0 - 0.5 * z
    } else {
        -(-z).exp_m1() / z
    }
}

/// `(1 - e^{-z}(1 + z)) / z^2`, by series near 0 where the closed form cancels.
fn phi2(z: f64) -> f64 {
    if z < 0.5 {
        // sum_{j>=2} (-1)^j (j-1)/j! z^{j-2}
        let mut sum = 0.0;
        let mut fact = 2.0;
        let mut zp = 1.0;
        for j in 2..30 {
            let term = (j - 1) as f64 / fact * zp;
            sum += if j % 2 == 0 { term } else { -term };
            fact *= (j + 1) as f64;
            zp *= z;
            if term.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        (1.0 - (-z).exp() * (1.0 + z)) / (z * z)
    }
}

/// Per-mode weights of one Duhamel step of length `dt`.
#[derive(Debug, Clone)]
pub struct DuhamelStep {
    pub decay: Vec<f64>,
    pub w_old: Vec<f64>,
    pub w_new: Vec<f64>,
}

impl DuhamelStep {
    pub fn new(grid: &Grid, dt: f64) -> Self {
        let len = grid.len();
        let (mut decay, mut w_old, mut w_new) = (vec![0.0; len], vec![0.0; len], vec![0.0; len]);
        for idx in 0..len {
            let z = grid.k2(idx) * dt;
            let (p1, p2) = (phi1(z), phi2(z));
            decay[idx] = (-z).exp();
            w_old[idx] = dt * p2;
            w_new[idx] = dt * (p1 - p2);
        }
        Self { decay, w_old, w_new }
    }

    /// `decay * u + w_old * g_old + w_new * g_new`, all already projected.
    pub fn advance(&self, u: &VectorField, g_old: &VectorField, g_new: &VectorField) -> VectorField {
        let grid = u.grid();
        let comps = std::array::from_fn(|d| {
            let (a, b, c) = (u.component(d), g_old.component(d), g_new.component(d));
            (0..grid.len()).map(|i| a[i] * self.decay[i] + b[i] * self.w_old[i] + c[i] * self.w_new[i]).collect()
        });
        VectorField::from_coeffs_unchecked(grid, comps, u.is_solenoidal() && g_old.is_solenoidal() && g_new.is_solenoidal())
    }
}

/// `U(t_m) = ∫_0^{t_m} e^{(t_m-s)Δ} ℙg(s) ds` at every node, `U(0) = 0`.
pub fn duhamel(f: &ForcedTrajectory) -> Result<Vec<VectorField>> {
    let projected: Vec<VectorField> = f.g.iter().map(leray_project).collect();
    duhamel_projected(&projected, f.time.dt)
}

/// As [`duhamel`] for forcing that is already divergence-free.
pub(crate) fn duhamel_projected(g: &[VectorField], dt: f64) -> Result<Vec<VectorField>> {
    let first = g.first().ok_or(Error::EmptyTrajectory)?;
    let step = DuhamelStep::new(first.grid(), dt);
    let mut out = Vec::with_capacity(g.len());
    out.push(VectorField::zeros(first.grid()));
    for m in 1..g.len() {
        let next = step.advance(&out[m - 1], &g[m - 1], &g[m]);
        out.push(next);
    }
    Ok(out)
}

/// Output of [`stokes_solve`].
#[derive(Debug, Clone)]
pub struct StokesSolution {
    pub u: Vec<VectorField>,
    pub grad_p: Vec<VectorField>,
    pub regularity_ratio: f64,
}

/// Centered differences inside, one-sided second order at the ends.
pub fn time_derivative(u: &[VectorField], dt: f64) -> Result<Vec<VectorField>> {
    let m = u.len();
    if m == 0 {
        return Err(Error::EmptyTrajectory);
    }
    if m == 1 {
        return Ok(vec![VectorField::zeros(u[0].grid())]);
    }
    if m == 2 {
        let d = (&u[1] - &u[0]).scaled(1.0 / dt);
        return Ok(vec![d.clone(), d]);
    }
    let mut out = Vec::with_capacity(m);
    let mut first = u[1].scaled(4.0);
    first.axpy(-3.0, &u[0]);
    first.axpy(-1.0, &u[2]);
    out.push(first.scaled(0.5 / dt));
    for i in 1..m - 1 {
        out.push((&u[i + 1] - &u[i - 1]).scaled(0.5 / dt));
    }
    let mut last = u[m - 1].scaled(3.0);
    last.axpy(-4.0, &u[m - 2]);
    last.axpy(1.0, &u[m - 3]);
    out.push(last.scaled(0.5 / dt));
    Ok(out)
}

/// Stokes system `∂_t u - Δu + ∇p = f`, `u(0) = 0`, plus the maximal-regularity
/// ratio `(‖∂_t u‖ + ‖∇²u‖ + ‖∇p‖) / ‖f‖` in `L^l(0,T; L^s)`.
pub fn stokes_solve(f: &ForcedTrajectory, l: f64, s: f64) -> Result<StokesSolution> {
    let u = duhamel(f)?;
    let grad_p: Vec<VectorField> = f.g.iter().map(gradient_part).collect();
    let denom = mixed_norm(&f.g, f.time.dt, l, s)?;
    if denom == 0.0 {
        return Ok(StokesSolution { u, grad_p, regularity_ratio: 0.0 });
    }
    let dudt = time_derivative(&u, f.time.dt)?;
    let hess: Vec<f64> = u.iter().map(|x| hessian_lp_norm(x, s)).collect::<Result<_>>()?;
    let num = mixed_norm(&dudt, f.time.dt, l, s)? + time_norm(&hess, f.time.dt, l)? + mixed_norm(&grad_p, f.time.dt, l, s)?;
    Ok(StokesSolution { u, grad_p, regularity_ratio: num / denom })
}

/// Largest L² jump between adjacent nodes (time-continuity monitor).
pub fn max_node_jump(u: &[VectorField]) -> f64 {
    u.windows(2).map(|w| (&w[1] - &w[0]).l2_norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::norms::{sobolev_seminorm, Sobolev};
    use crate::spectral::random::random_divfree_field;
    use crate::spectral::ScalarField;
    use crate::spectral::ops::gradient;
    use std::f64::consts::PI;

    fn grid(n: usize) -> Grid {
        Grid::new(n, 2.0 * PI).unwrap()
    }

    #[test]
    fn phi_series_matches_closed_form() {
        for z in [0.3, 0.45, 0.49] {
            let closed = (1.0 - (-z as f64).exp() * (1.0 + z)) / (z * z);
            assert!((phi2(z) - closed).abs() < 1e-13);
        }
        assert!((phi2(1e-12) - 0.5).abs() < 1e-12);
        assert!((phi1(1e-12) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn heat_flow_basics() {
        let g = grid(8);
        let f = random_divfree_field(&g, 1, 1.0, 1.0).unwrap();
        assert!((&heat_flow(&f, 0.0).unwrap() - &f).is_zero());
        assert!(matches!(heat_flow(&f, -1e-3), Err(Error::NegativeTime(_))));
        let single = VectorField::from_fn(&g, |x| [0.0, (x[0] + 2.0 * x[2]).sin(), 0.0]);
        let t = 0.3;
        let h = heat_flow(&single, t).unwrap();
        assert!((h.l2_norm() - single.l2_norm() * (-5.0 * t).exp()).abs() < 1e-13);
        assert!(h.is_solenoidal());
    }

    #[test]
    fn semigroup_law() {
        let g = grid(16);
        let f = random_divfree_field(&g, 2, 1.0, 1.0).unwrap();
        let two = heat_flow(&heat_flow(&f, 0.13).unwrap(), 0.29).unwrap();
        let one = heat_flow(&f, 0.42).unwrap();
        assert!((&two - &one).max_abs_coeff() <= 1e-13);
    }

    #[test]
    fn caloric_pair_contract() {
        let g = grid(8);
        let v0 = random_divfree_field(&g, 3, 1.0, 1.0).unwrap();
        let time = TimeGrid::covering(0.5, 1.0 / 32.0).unwrap();
        let cal = caloric_pair(&v0, &v0, time).unwrap();
        assert!((&cal.v1()[0] - &v0).is_zero());
        for m in 0..time.len() {
            assert!((&cal.v1()[m] - &cal.h1()[m]).is_zero());
            let direct = heat_flow(&v0, time.t(m)).unwrap();
            assert!((&direct - &cal.v1()[m]).max_abs_coeff() <= 1e-12);
        }
        for d in cal.decay() {
            assert!(d.is_monotone(), "L^{} not monotone", d.p);
        }
        let l3 = cal.decay_for(3.0).unwrap();
        assert!(l3.v1.iter().all(|&x| x <= l3.v1[0] * (1.0 + 1e-12)));
        let zero = caloric_pair(&VectorField::zeros(&g), &VectorField::zeros(&g), time).unwrap();
        assert!(zero.v1().iter().all(VectorField::is_zero));
        assert!(matches!(caloric_pair(&v0, &VectorField::zeros(&grid(16)), time), Err(Error::GridMismatch)));
    }

    #[test]
    fn time_grid_validation() {
        assert_eq!(TimeGrid::covering(0.25, 1.0 / 256.0).unwrap().steps, 64);
        assert!(TimeGrid::covering(0.25, 0.1).is_err());
        assert!(TimeGrid::new(4, 0.0).is_err());
    }

    fn constant_forcing(f: &VectorField, time: TimeGrid) -> ForcedTrajectory {
        ForcedTrajectory::new(time, vec![f.clone(); time.len()]).unwrap()
    }

    #[test]
    fn duhamel_constant_single_mode() {
        let g = grid(8);
        let f = VectorField::from_fn(&g, |x| [0.0, 0.0, (x[0] + x[1]).cos()]);
        let time = TimeGrid::covering(0.5, 1.0 / 16.0).unwrap();
        let u = duhamel(&constant_forcing(&f, time)).unwrap();
        let kappa = 2.0;
        for (m, um) in u.iter().enumerate() {
            let want = f.scaled((1.0 - (-kappa * time.t(m)).exp()) / kappa);
            assert!((um - &want).max_abs_coeff() < 1e-14);
        }
    }

    #[test]
    fn duhamel_trivial_inputs() {
        let g = grid(8);
        let time = TimeGrid::covering(0.25, 1.0 / 16.0).unwrap();
        let zero = duhamel(&constant_forcing(&VectorField::zeros(&g), time)).unwrap();
        assert!(zero.iter().all(VectorField::is_zero));
        let phi = ScalarField::from_fn(&g, |x| (x[0] - 2.0 * x[1]).sin() + x[2].cos());
        let grad = gradient(&phi);
        let u = duhamel(&constant_forcing(&grad, time)).unwrap();
        assert!(u.iter().all(|x| x.max_abs_coeff() < 1e-15));
        assert!(matches!(ForcedTrajectory::new(time, vec![]), Err(Error::EmptyTrajectory)));
    }

    fn smooth_forcing(g: &Grid, seed: u64, time: TimeGrid) -> ForcedTrajectory {
        let a = random_divfree_field(g, seed, 1.0, 1.0).unwrap();
        let b = random_divfree_field(g, seed + 1000, 1.0, 1.0).unwrap();
        let nodes = (0..time.len())
            .map(|m| {
                let t = time.t(m);
                let mut f = a.scaled((3.0 * t).cos());
                f.axpy((7.0 * t + 0.4).sin(), &b);
                f
            })
            .collect();
        ForcedTrajectory::new(time, nodes).unwrap()
    }

    #[test]
    fn recursion_matches_direct_convolution() {
        let g = grid(8);
        let time = TimeGrid::covering(0.25, 1.0 / 32.0).unwrap();
        let f = smooth_forcing(&g, 11, time);
        let u = duhamel(&f).unwrap();
        let pg: Vec<VectorField> = f.g.iter().map(leray_project).collect();
        let step = DuhamelStep::new(&g, time.dt);
        for m in [1, 4, time.steps] {
            let mut direct = VectorField::zeros(&g);
            for j in 0..m {
                let lag = time.t(m) - time.t(j + 1);
                let piece = step.advance(&VectorField::zeros(&g), &pg[j], &pg[j + 1]);
                direct = &direct + &heat_flow(&piece, lag).unwrap();
            }
            assert!((&direct - &u[m]).l2_norm() <= 1e-10 * u[m].l2_norm().max(1e-300));
        }
    }

    #[test]
    fn discrete_duhamel_bound() {
        let g = grid(8);
        let time = TimeGrid::covering(0.5, 1.0 / 64.0).unwrap();
        for seed in 0..4 {
            let f = smooth_forcing(&g, seed, time);
            let u = duhamel(&f).unwrap();
            let gm: Vec<f64> = f.g.iter().map(|x| sobolev_seminorm(x, Sobolev::DotMinus1)).collect();
            let rhs = time_norm(&gm, time.dt, 2.0).unwrap();
            let sup = u.iter().map(VectorField::l2_norm).fold(0.0, f64::max);
            let grad: Vec<f64> = u.iter().map(|x| sobolev_seminorm(x, Sobolev::Dot1)).collect();
            let dissip = time_norm(&grad, time.dt, 2.0).unwrap();
            assert!(sup <= 1.05 / 2f64.sqrt() * rhs);
            assert!(dissip <= 1.05 * rhs);
        }
    }

    #[test]
    fn time_continuity_is_linear_in_dt() {
        let g = grid(8);
        let jump = |dt: f64| {
            let time = TimeGrid::covering(0.25, dt).unwrap();
            max_node_jump(&duhamel(&smooth_forcing(&g, 5, time)).unwrap())
        };
        let (a, b) = (jump(1.0 / 32.0), jump(1.0 / 64.0));
        assert!((a / b - 2.0).abs() < 0.2, "ratio {}", a / b);
    }

    #[test]
    fn stokes_split() {
        let g = grid(8);
        let time = TimeGrid::covering(0.25, 1.0 / 32.0).unwrap();
        let zero = constant_forcing(&VectorField::zeros(&g), time);
        let s = stokes_solve(&zero, 1.5, 1.125).unwrap();
        assert_eq!(s.regularity_ratio, 0.0);

        let phi = ScalarField::from_fn(&g, |x| (x[0] + x[1]).sin());
        let grad = gradient(&phi);
        let s = stokes_solve(&constant_forcing(&grad, time), 1.5, 1.5).unwrap();
        assert!(s.u.iter().all(|x| x.max_abs_coeff() < 1e-15));
        assert!(s.grad_p.iter().all(|p| (p - &grad).max_abs_coeff() < 1e-15));

        let ratio = |dt: f64| {
            let time = TimeGrid::covering(0.25, dt).unwrap();
            let s = stokes_solve(&smooth_forcing(&g, 9, time), 1.5, 1.125).unwrap();
            assert!(s.grad_p.iter().all(|p| p.max_abs_coeff() < 1e-12));
            s.regularity_ratio
        };
        let (a, b) = (ratio(1.0 / 32.0), ratio(1.0 / 64.0));
        assert!(a.is_finite() && a > 0.0);
        assert!(a / b < 2.0 && b / a < 2.0);
    }
}
