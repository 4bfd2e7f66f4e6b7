//! Lebesgue, Sobolev and mixed space-time norms.
//!
//! Lebesgue norms with `p < inf` use the collocation grid as quadrature
//! (cell weight `(L/n)^3`); Sobolev norms are spectral sums. Time integrals
//! are composite trapezoid rules over uniform nodes.

use num_complex::Complex64;

use super::field::{ScalarField, VectorField};
use super::ops::gradient_physical;
use crate::error::{Error, Result};

/// Sobolev index supported by [`sobolev_seminorm`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sobolev {
    /// homogeneous, multiplier `|k|`
    Dot1,
    /// homogeneous, multiplier `|k|^-1`
    DotMinus1,
    /// inhomogeneous, multiplier `(1 + |k|^2)^(-3/4)`
    Minus3Half,
}

impl Sobolev {
    pub fn from_index(s: f64) -> Result<Self> {
        if s == 1.0 {
            Ok(Sobolev::Dot1)
        } else if s == -1.0 {
            Ok(Sobolev::DotMinus1)
        } else if s == -1.5 {
            Ok(Sobolev::Minus3Half)
        } else {
            Err(Error::InvalidArgument(format!("unsupported Sobolev index {s}")))
        }
    }

    fn weight(self, k2: f64) -> f64 {
        match self {
            Sobolev::Dot1 => k2,
            Sobolev::DotMinus1 => {
                if k2 == 0.0 {
                    0.0
                } else {
                    1.0 / k2
                }
            }
            Sobolev::Minus3Half => (1.0 + k2).powf(-1.5),
        }
    }
}

fn check_exponent(p: f64) -> Result<()> {
    if p >= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("Lebesgue exponent must be >= 1, got {p}")))
    }
}

/// `L^p` norm of pointwise samples with quadrature weight `cell`.
pub fn lp_norm_samples(values: impl Iterator<Item = f64>, cell: f64, p: f64) -> f64 {
    if p.is_infinite() {
        values.map(f64::abs).fold(0.0, f64::max)
    } else if p == 2.0 {
        (cell * values.map(|v| v * v).sum::<f64>()).sqrt()
    } else {
        (cell * values.map(|v| v.abs().powf(p)).sum::<f64>()).powf(1.0 / p)
    }
}

pub(crate) fn magnitudes(phys: &[Vec<f64>; 3]) -> impl Iterator<Item = f64> + '_ {
    (0..phys[0].len()).map(move |q| (phys[0][q] * phys[0][q] + phys[1][q] * phys[1][q] + phys[2][q] * phys[2][q]).sqrt())
}

/// Fields with an `L^p` norm on the collocation grid.
pub trait LpNorm {
    fn lp_norm(&self, p: f64) -> Result<f64>;
}

impl LpNorm for VectorField {
    fn lp_norm(&self, p: f64) -> Result<f64> {
        check_exponent(p)?;
        let phys = self.to_physical();
        Ok(lp_norm_samples(magnitudes(&phys), self.grid().cell_volume(), p))
    }
}

impl LpNorm for ScalarField {
    fn lp_norm(&self, p: f64) -> Result<f64> {
        check_exponent(p)?;
        Ok(lp_norm_samples(self.to_physical().into_iter(), self.grid().cell_volume(), p))
    }
}

/// `L^p` norm of the pointwise Frobenius norm of `grad f`.
pub fn gradient_lp_norm(f: &VectorField, p: f64) -> Result<f64> {
    check_exponent(p)?;
    let g = gradient_physical(f);
    let len = f.grid().len();
    let frob = (0..len).map(|q| {
        let mut acc = 0.0;
        for row in &g {
            for c in row {
                acc += c[q] * c[q];
            }
        }
        acc.sqrt()
    });
    Ok(lp_norm_samples(frob, f.grid().cell_volume(), p))
}

/// `L^p` norm of the pointwise Frobenius norm of the Hessian `d_j d_l f_i`.
pub fn hessian_lp_norm(f: &VectorField, p: f64) -> Result<f64> {
    check_exponent(p)?;
    let grid = f.grid();
    let mut acc = vec![0.0; grid.len()];
    let mut buf = vec![Complex64::default(); grid.len()];
    for i in 0..3 {
        let comp = f.component(i);
        for j in 0..3 {
            for l in j..3 {
                for (idx, (b, &c)) in buf.iter_mut().zip(comp).enumerate() {
                    let k = grid.k_deriv(idx);
                    *b = -c * (k[j] * k[l]);
                }
                let w = if j == l { 1.0 } else { 2.0 };
                for (a, v) in acc.iter_mut().zip(grid.inverse(&buf)) {
                    *a += w * v * v;
                }
            }
        }
    }
    Ok(lp_norm_samples(acc.into_iter().map(f64::sqrt), grid.cell_volume(), p))
}

/// Free-function form of [`LpNorm::lp_norm`].
pub fn lp_norm<F: LpNorm + ?Sized>(f: &F, p: f64) -> Result<f64> {
    f.lp_norm(p)
}

pub fn sobolev_seminorm(f: &VectorField, s: Sobolev) -> f64 {
    let grid = f.grid();
    let mut acc = 0.0;
    for d in 0..3 {
        for (idx, c) in f.component(d).iter().enumerate() {
            acc += s.weight(grid.k2(idx)) * c.norm_sqr();
        }
    }
    (grid.volume() * acc).sqrt()
}

/// Trapezoid weights for `count` uniform nodes.
pub fn trapezoid_weights(count: usize, dt: f64) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..count).map(|m| if m == 0 || m == count - 1 { 0.5 * dt } else { dt }).collect(),
    }
}

pub fn trapezoid(values: &[f64], dt: f64) -> f64 {
    values.iter().zip(trapezoid_weights(values.len(), dt)).map(|(v, w)| v * w).sum()
}

/// Running trapezoid integral, starting at 0.
pub fn cumulative_trapezoid(values: &[f64], dt: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    for (m, v) in values.iter().enumerate() {
        if m > 0 {
            acc += 0.5 * dt * (values[m - 1] + v);
        }
        out.push(acc);
    }
    out
}

/// `L^l` in time of per-node spatial norms.
pub fn time_norm(values: &[f64], dt: f64, l: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    check_exponent(l)?;
    if l.is_infinite() {
        return Ok(values.iter().copied().fold(0.0, f64::max));
    }
    let powered: Vec<f64> = values.iter().map(|v| v.powf(l)).collect();
    Ok(trapezoid(&powered, dt).powf(1.0 / l))
}

/// `L^l(0,T; L^s)` of a uniformly sampled trajectory.
pub fn mixed_norm(fields: &[VectorField], dt: f64, l: f64, s: f64) -> Result<f64> {
    if fields.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    let per_node = fields.iter().map(|f| f.lp_norm(s)).collect::<Result<Vec<_>>>()?;
    time_norm(&per_node, dt, l)
}

/// Trajectory-space norm `sup_t ||u||_{L^2} + (int ||grad u||^2)^(1/2)`.
pub fn xt_norm(fields: &[VectorField], dt: f64) -> Result<f64> {
    if fields.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    let sup = fields.iter().map(|f| f.l2_norm()).fold(0.0, f64::max);
    let grad2: Vec<f64> = fields.iter().map(|f| sobolev_seminorm(f, Sobolev::Dot1).powi(2)).collect();
    Ok(sup + trapezoid(&grad2, dt).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::grid::Grid;
    use crate::spectral::random::random_divfree_field;
    use std::f64::consts::PI;

    fn sin_x(g: &Grid) -> VectorField {
        VectorField::from_fn(g, |x| [x[0].sin(), 0.0, 0.0])
    }

    #[test]
    fn zero_field_has_zero_norms() {
        let g = Grid::new(8, 2.0 * PI).unwrap();
        let z = VectorField::zeros(&g);
        for p in [1.0, 2.0, 3.0, 10.0 / 3.0, 5.0, f64::INFINITY] {
            assert_eq!(z.lp_norm(p).unwrap(), 0.0);
        }
    }

    #[test]
    fn sine_l2_and_l3() {
        // closed forms: int sin^2 = pi over a period, int |sin|^3 = 8/3
        let g = Grid::new(16, 2.0 * PI).unwrap();
        let f = sin_x(&g);
        let l2 = ((2.0 * PI).powi(3) / 2.0).sqrt();
        assert!((f.lp_norm(2.0).unwrap() - l2).abs() < 1e-12 * l2);
        assert!((l2 - 11.1366).abs() < 1e-4);
        // |sin|^3 is not a trigonometric polynomial; a fine grid resolves it
        let fine = Grid::new(64, 2.0 * PI).unwrap();
        let l3 = (8.0 / 3.0 * (2.0 * PI).powi(2)).powf(1.0 / 3.0);
        assert!((sin_x(&fine).lp_norm(3.0).unwrap() - l3).abs() < 1e-4 * l3);
        assert!(f.lp_norm(0.5).is_err());
    }

    #[test]
    fn sobolev_single_mode() {
        let g = Grid::new(8, 2.0 * PI).unwrap();
        let f = VectorField::from_fn(&g, |x| [0.0, (x[0] + x[2]).sin(), 0.0]);
        let a = f.l2_norm();
        let kappa = 2f64.sqrt();
        assert!((sobolev_seminorm(&f, Sobolev::Dot1) - kappa * a).abs() < 1e-12);
        assert!((sobolev_seminorm(&f, Sobolev::DotMinus1) - a / kappa).abs() < 1e-12);
        assert!((sobolev_seminorm(&f, Sobolev::Minus3Half) - a * 3f64.powf(-0.75)).abs() < 1e-12);
    }

    #[test]
    fn cauchy_schwarz_between_dual_seminorms() {
        let g = Grid::new(16, 2.0 * PI).unwrap();
        for seed in 0..10 {
            let f = random_divfree_field(&g, seed, 1.0, 0.5 + seed as f64 * 0.3).unwrap();
            let lhs = f.l2_norm_sqr();
            let rhs = sobolev_seminorm(&f, Sobolev::Dot1) * sobolev_seminorm(&f, Sobolev::DotMinus1);
            assert!(lhs <= rhs * (1.0 + 1e-12));
        }
    }

    #[test]
    fn parseval_against_quadrature() {
        let g = Grid::new(16, 2.0 * PI).unwrap();
        let f = random_divfree_field(&g, 3, 2.0, 1.0).unwrap();
        let spectral = f.l2_norm();
        let quad = f.lp_norm(2.0).unwrap();
        assert!((spectral - quad).abs() <= 1e-10 * spectral);
    }

    #[test]
    fn mixed_norm_constant_in_time() {
        let g = Grid::new(8, 2.0 * PI).unwrap();
        let f = VectorField::from_fn(&g, |x| [x[1].sin(), x[2].cos(), 0.0]);
        let t = 0.75;
        let nodes: Vec<VectorField> = (0..=12).map(|_| f.clone()).collect();
        let got = mixed_norm(&nodes, t / 12.0, 5.0, 5.0).unwrap();
        let want = t.powf(0.2) * f.lp_norm(5.0).unwrap();
        assert!((got - want).abs() < 1e-12 * want);
        let zeros: Vec<VectorField> = (0..4).map(|_| VectorField::zeros(&g)).collect();
        assert_eq!(mixed_norm(&zeros, 0.1, 2.0, 2.0).unwrap(), 0.0);
        assert!(matches!(mixed_norm(&[], 0.1, 2.0, 2.0), Err(Error::EmptyTrajectory)));
    }

    #[test]
    fn mixed_norm_linear_amplitude() {
        // (int_0^1 t^2)^(1/2) = 1/sqrt(3); trapezoid error is dt^2/6 under the root
        let g = Grid::new(8, 2.0 * PI).unwrap();
        let unit = VectorField::from_fn(&g, |x| [x[1].sin(), 0.0, 0.0]);
        let unit = unit.scaled(1.0 / unit.l2_norm());
        let steps = 400;
        let dt = 1.0 / steps as f64;
        let nodes: Vec<VectorField> = (0..=steps).map(|m| unit.scaled(m as f64 * dt)).collect();
        let got = mixed_norm(&nodes, dt, 2.0, 2.0).unwrap();
        let oracle = (1.0 / 3.0 + dt * dt / 6.0).sqrt();
        assert!((got - oracle).abs() < 1e-12);
        assert!((got - 1.0 / 3f64.sqrt()).abs() < 1e-5);
    }

    #[test]
    fn derivative_norms_of_single_mode() {
        // u = sin(x) e_y: |grad u| = |cos x|, |hess u| = |sin x|
        let g = Grid::new(16, 2.0 * PI).unwrap();
        let f = VectorField::from_fn(&g, |x| [0.0, x[0].sin(), 0.0]);
        let l2 = ((2.0 * PI).powi(3) / 2.0).sqrt();
        assert!((gradient_lp_norm(&f, 2.0).unwrap() - l2).abs() < 1e-12 * l2);
        assert!((hessian_lp_norm(&f, 2.0).unwrap() - l2).abs() < 1e-12 * l2);
        assert!((gradient_lp_norm(&f, f64::INFINITY).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cumulative_trapezoid_of_identity() {
        let v: Vec<f64> = (0..=10).map(|m| m as f64 * 0.1).collect();
        let c = cumulative_trapezoid(&v, 0.1);
        assert!((c[10] - 0.5).abs() < 1e-14);
        assert_eq!(c[0], 0.0);
    }
}
