//! Picard iteration for `u = B(u,u) + L(u) + R` with a contraction certificate.
//!
//! If `‖B(u,v)‖ ≤ c1‖u‖‖v‖`, `‖L(u)‖ ≤ c2‖u‖` and `(1-c2)^2 > 4 c1 ‖R‖`, the
//! map sends the closed ball of radius
//!
//! ```text
//! x1 = (1 - c2 - sqrt((1-c2)^2 - 4 c1 ‖R‖)) / (2 c1)
//! ```
//!
//! into itself and contracts there with rate `γ = 2 c1 x1 + c2 < 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A quadratic map on a normed space.
pub trait QuadraticMap {
    type Elem: Clone;

    fn zero(&self) -> Self::Elem;
    fn norm(&self, u: &Self::Elem) -> f64;
    fn distance(&self, a: &Self::Elem, b: &Self::Elem) -> f64;
    fn bilinear(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn linear(&self, a: &Self::Elem) -> Self::Elem;
    fn source(&self) -> Self::Elem;
    fn sum(&self, parts: &[Self::Elem]) -> Self::Elem;

    /// `B(u,u) + L(u) + R`; override when a fused evaluation is cheaper.
    fn apply(&self, u: &Self::Elem) -> Self::Elem {
        self.sum(&[self.bilinear(u, u), self.linear(u), self.source()])
    }
}

/// Outcome of the contraction condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Condition {
    pub ok: bool,
    /// `NaN` when `ok` is false.
    pub x1: f64,
    pub x2: f64,
}

/// Tests `(1-c2)^2 > 4 c1 r_norm` strictly and returns the two roots of
/// `c1 x^2 - (1-c2) x + r_norm = 0`.
pub fn check_condition(c1: f64, c2: f64, r_norm: f64) -> Result<Condition> {
    validate_constants(c1, c2, r_norm)?;
    let a = 1.0 - c2;
    let disc = a * a - 4.0 * c1 * r_norm;
    if disc <= 0.0 {
        return Ok(Condition { ok: false, x1: f64::NAN, x2: f64::NAN });
    }
    let root = disc.sqrt();
    // the smaller root in cancellation-free form, exact 0 when r_norm = 0
    let x1 = 2.0 * r_norm / (a + root);
    let x2 = (a + root) / (2.0 * c1);
    Ok(Condition { ok: true, x1, x2 })
}

fn validate_constants(c1: f64, c2: f64, r_norm: f64) -> Result<()> {
    if !(c1 > 0.0) || !c1.is_finite() {
        return Err(Error::InvalidConstants(format!("c1 must be positive, got {c1}")));
    }
    if !(0.0..1.0).contains(&c2) {
        return Err(Error::InvalidConstants(format!("c2 must lie in [0,1), got {c2}")));
    }
    if !(r_norm >= 0.0) || !r_norm.is_finite() {
        return Err(Error::InvalidConstants(format!("|R| must be nonnegative, got {r_norm}")));
    }
    Ok(())
}

/// A map together with its claimed bound constants.
#[derive(Debug, Clone)]
pub struct QuadraticProblem<M> {
    pub map: M,
    pub c1: f64,
    pub c2: f64,
    pub r_norm: f64,
}

impl<M: QuadraticMap> QuadraticProblem<M> {
    pub fn new(map: M, c1: f64, c2: f64, r_norm: f64) -> Result<Self> {
        validate_constants(c1, c2, r_norm)?;
        Ok(Self { map, c1, c2, r_norm })
    }

    /// Checks the claimed constants on probe pairs; slack `1e-9` relative.
    pub fn validate_on(&self, probes: &[(M::Elem, M::Elem)]) -> Result<ProbeReport> {
        let slack = |bound: f64| bound * (1.0 + 1e-9) + 1e-300;
        let mut report = ProbeReport::default();
        for (u, v) in probes {
            let (nu, nv) = (self.map.norm(u), self.map.norm(v));
            let b = self.map.norm(&self.map.bilinear(u, v));
            let l = self.map.norm(&self.map.linear(u));
            if nu > 0.0 && nv > 0.0 {
                report.max_bilinear_ratio = report.max_bilinear_ratio.max(b / (nu * nv));
            }
            if nu > 0.0 {
                report.max_linear_ratio = report.max_linear_ratio.max(l / nu);
            }
            if b > slack(self.c1 * nu * nv) {
                return Err(Error::ConstantsViolated(format!("|B(u,v)| = {b:e} > c1 |u||v| = {:e}", self.c1 * nu * nv)));
            }
            if l > slack(self.c2 * nu) {
                return Err(Error::ConstantsViolated(format!("|L(u)| = {l:e} > c2 |u| = {:e}", self.c2 * nu)));
            }
            report.probes += 1;
        }
        let r = self.map.norm(&self.map.source());
        if (r - self.r_norm).abs() > 1e-9 * r.max(self.r_norm) {
            return Err(Error::ConstantsViolated(format!("|R| = {r:e} but r_norm = {:e}", self.r_norm)));
        }
        Ok(report)
    }
}

/// Largest observed `‖B(u,v)‖/(‖u‖‖v‖)` and `‖L(u)‖/‖u‖` over a probe set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub probes: usize,
    pub max_bilinear_ratio: f64,
    pub max_linear_ratio: f64,
}

/// Evidence that a Picard run stayed inside the contraction ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointCertificate {
    pub c1: f64,
    pub c2: f64,
    pub r_norm: f64,
    pub x1: f64,
    pub x2: f64,
    pub gamma: f64,
    pub iterations: usize,
    pub final_residual: f64,
    /// `‖u_n‖` for `n = 1..=iterations`.
    pub iterate_norms: Vec<f64>,
    /// `‖u_{n+1}-u_n‖ / ‖u_n-u_{n-1}‖`, skipping steps at the roundoff floor.
    pub contraction_ratios: Vec<f64>,
}

impl FixedPointCertificate {
    pub fn max_contraction_ratio(&self) -> f64 {
        self.contraction_ratios.iter().copied().fold(0.0, f64::max)
    }

    pub fn last_contraction_ratio(&self) -> Option<f64> {
        self.contraction_ratios.last().copied()
    }
}

/// Steps smaller than this fraction of the iterate are treated as roundoff.
const RATIO_FLOOR: f64 = 1e-13;

/// Iterates from `u0 = 0` until `‖u_{n+1} - u_n‖ ≤ tol`.
pub fn solve<M: QuadraticMap>(
    p: &QuadraticProblem<M>,
    tol: f64,
    max_iter: usize,
) -> Result<(M::Elem, FixedPointCertificate)> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let cond = check_condition(p.c1, p.c2, p.r_norm)?;
    if !cond.ok {
        return Err(Error::ConditionViolated { c1: p.c1, c2: p.c2, r_norm: p.r_norm });
    }
    let gamma = 1.0 - ((1.0 - p.c2).powi(2) - 4.0 * p.c1 * p.r_norm).sqrt();
    let ball = cond.x1 * (1.0 + 1e-9) + tol;
    let mut u = p.map.zero();
    let mut norms = Vec::new();
    let mut ratios = Vec::new();
    let mut prev_step: Option<f64> = None;
    for n in 1..=max_iter {
        let next = p.map.apply(&u);
        let step = p.map.distance(&next, &u);
        let nn = p.map.norm(&next);
        norms.push(nn);
        if nn > ball {
            return Err(Error::ConstantsViolated(format!("iterate {n} has norm {nn:e}, outside the ball of radius {:e}", cond.x1)));
        }
        if let Some(prev) = prev_step {
            if prev > RATIO_FLOOR * nn.max(1e-300) && step > RATIO_FLOOR * nn {
                ratios.push(step / prev);
            }
        }
        u = next;
        if step <= tol {
            let cert = FixedPointCertificate {
                c1: p.c1,
                c2: p.c2,
                r_norm: p.r_norm,
                x1: cond.x1,
                x2: cond.x2,
                gamma,
                iterations: n,
                final_residual: step,
                iterate_norms: norms,
                contraction_ratios: ratios,
            };
            return Ok((u, cert));
        }
        prev_step = Some(step);
    }
    Err(Error::NoConvergence { iterations: max_iter, tol, last_step: prev_step.unwrap_or(f64::NAN) })
}

/// `B(u,v) = b u v`, `L(u) = l u`, `R = r` on the real line.
#[derive(Debug, Clone, Copy)]
pub struct ScalarQuadratic {
    pub b: f64,
    pub l: f64,
    pub r: f64,
}

impl QuadraticMap for ScalarQuadratic {
    type Elem = f64;

    fn zero(&self) -> f64 {
        0.0
    }

    fn norm(&self, u: &f64) -> f64 {
        u.abs()
    }

    fn distance(&self, a: &f64, b: &f64) -> f64 {
        (a - b).abs()
    }

    fn bilinear(&self, a: &f64, b: &f64) -> f64 {
        self.b * a * b
    }

    fn linear(&self, a: &f64) -> f64 {
        self.l * a
    }

    fn source(&self) -> f64 {
        self.r
    }

    fn sum(&self, parts: &[f64]) -> f64 {
        parts.iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn condition_roots() {
        let c = check_condition(1.0, 0.0, 0.21).unwrap();
        assert!(c.ok);
        assert!((c.x1 - 0.3).abs() < 1e-15 && (c.x2 - 0.7).abs() < 1e-15);
        assert!(!check_condition(1.0, 0.0, 0.25).unwrap().ok);
        let c = check_condition(0.5, 0.5, 0.1).unwrap();
        assert!((c.x1 - (0.5 - 0.05f64.sqrt())).abs() < 1e-15);
        assert!(matches!(check_condition(0.0, 0.0, 0.1), Err(Error::InvalidConstants(_))));
        assert!(matches!(check_condition(1.0, 1.0, 0.1), Err(Error::InvalidConstants(_))));
        assert!(matches!(check_condition(1.0, 0.2, -0.1), Err(Error::InvalidConstants(_))));
    }

    #[test]
    fn scalar_instance() {
        let p = QuadraticProblem::new(ScalarQuadratic { b: 1.0, l: 0.0, r: 0.21 }, 1.0, 0.0, 0.21).unwrap();
        let (u, cert) = solve(&p, 1e-12, 200).unwrap();
        assert!((u - 0.3).abs() < 1e-10);
        assert!((cert.gamma - 0.6).abs() < 1e-12);
        assert!((cert.gamma - (2.0 * cert.c1 * cert.x1 + cert.c2)).abs() < 1e-12);
        let last = cert.last_contraction_ratio().unwrap();
        assert!((last - 0.6).abs() < 0.06);
        assert!(cert.iterate_norms.iter().all(|&n| n <= cert.x1 + 1e-12));
    }

    #[test]
    fn zero_source_and_linear_resolvent() {
        let p = QuadraticProblem::new(ScalarQuadratic { b: 0.7, l: 0.3, r: 0.0 }, 0.7, 0.3, 0.0).unwrap();
        let (u, cert) = solve(&p, 1e-12, 10).unwrap();
        assert_eq!(u, 0.0);
        assert_eq!(cert.iterations, 1);
        assert_eq!(cert.x1, 0.0);

        let r = 0.01;
        let p = QuadraticProblem::new(ScalarQuadratic { b: 0.0, l: 0.5, r }, 1e-3, 0.5, r).unwrap();
        let (u, _) = solve(&p, 1e-14, 200).unwrap();
        assert!((u - 2.0 * r).abs() < 1e-13);
    }

    #[test]
    fn boundary_and_budget_errors() {
        let p = QuadraticProblem::new(ScalarQuadratic { b: 1.0, l: 0.0, r: 0.25 }, 1.0, 0.0, 0.25).unwrap();
        assert!(matches!(solve(&p, 1e-10, 100), Err(Error::ConditionViolated { .. })));
        let p = QuadraticProblem::new(ScalarQuadratic { b: 1.0, l: 0.0, r: 0.21 }, 1.0, 0.0, 0.21).unwrap();
        assert!(matches!(solve(&p, 1e-14, 3), Err(Error::NoConvergence { .. })));
    }

    #[test]
    fn probes_catch_understated_constants() {
        let p = QuadraticProblem::new(ScalarQuadratic { b: 2.0, l: 0.0, r: 0.01 }, 1.0, 0.0, 0.01).unwrap();
        assert!(matches!(p.validate_on(&[(1.0, 1.0)]), Err(Error::ConstantsViolated(_))));
        let p = QuadraticProblem::new(ScalarQuadratic { b: 1.0, l: 0.2, r: 0.01 }, 1.0, 0.2, 0.01).unwrap();
        let rep = p.validate_on(&[(1.0, -2.0), (0.5, 0.5)]).unwrap();
        assert!((rep.max_bilinear_ratio - 1.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn contraction_law_on_scalar_instances(b in 0.1f64..2.0, l in 0.0f64..0.8, frac in 0.0f64..0.95) {
            let r = frac * (1.0 - l).powi(2) / (4.0 * b);
            let p = QuadraticProblem::new(ScalarQuadratic { b, l, r }, b, l, r).unwrap();
            let (u, cert) = solve(&p, 1e-12, 10_000).unwrap();
            prop_assert!((u - cert.x1).abs() < 1e-9 * (1.0 + cert.x1) / (1.0 - cert.gamma));
            prop_assert!((cert.gamma - (2.0 * b * cert.x1 + l)).abs() < 1e-12);
            for &n in &cert.iterate_norms {
                prop_assert!(n <= cert.x1 + 1e-12);
            }
            for &ratio in &cert.contraction_ratios {
                prop_assert!(ratio <= cert.gamma * 1.05);
            }
        }
    }
}
