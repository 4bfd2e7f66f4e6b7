//! Scalar, vector and rank-2 tensor fields held as spectral coefficients.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use super::grid::Grid;
use crate::error::{Error, Result};

/// Relative tolerance behind the solenoidal flag: `|k . u(k)| <= tol |u(k)|`.
pub const SOLENOIDAL_TOL: f64 = 1e-10;

pub(crate) fn zeros(len: usize) -> Vec<Complex64> {
    vec![Complex64::default(); len]
}

/// Zeroes every mode outside the 2/3-rule band.
pub(crate) fn truncate(grid: &Grid, coeffs: &mut [Complex64]) {
    for (c, &keep) in coeffs.iter_mut().zip(grid.mask()) {
        if !keep {
            *c = Complex64::default();
        }
    }
}

pub(crate) fn ensure_same(a: &Grid, b: &Grid) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

#[derive(Debug, Clone)]
pub struct ScalarField {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl ScalarField {
    pub fn zeros(grid: &Grid) -> Self {
        Self { grid: grid.clone(), coeffs: zeros(grid.len()) }
    }

    pub fn from_coeffs(grid: &Grid, coeffs: Vec<Complex64>) -> Self {
        assert_eq!(coeffs.len(), grid.len(), "coefficient count does not match grid");
        Self { grid: grid.clone(), coeffs }
    }

    pub fn from_physical(grid: &Grid, values: &[f64]) -> Self {
        assert_eq!(values.len(), grid.len(), "sample count does not match grid");
        Self { grid: grid.clone(), coeffs: grid.forward(values) }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn([f64; 3]) -> f64) -> Self {
        Self::from_physical(grid, &grid.sample(f))
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn to_physical(&self) -> Vec<f64> {
        self.grid.inverse(&self.coeffs)
    }

    /// Spatial mean (the zero-mode coefficient).
    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    /// Largest violation of `c(-m) = conj(c(m))`, relative to the largest coefficient.
    pub fn hermitian_defect(&self) -> f64 {
        hermitian_defect(&self.grid, &self.coeffs)
    }

    pub fn l2_norm(&self) -> f64 {
        (self.grid.volume() * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt()
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self { grid: self.grid.clone(), coeffs: self.coeffs.iter().map(|c| c * a).collect() }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        ensure_same(&self.grid, &other.grid)?;
        Ok(Self {
            grid: self.grid.clone(),
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        ensure_same(&self.grid, &other.grid)?;
        Ok(Self {
            grid: self.grid.clone(),
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

fn hermitian_defect(grid: &Grid, coeffs: &[Complex64]) -> f64 {
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    let worst = (0..grid.len())
        .map(|idx| (coeffs[grid.partner(idx)] - coeffs[idx].conj()).norm())
        .fold(0.0, f64::max);
    worst / scale
}

/// Three-component field with an asserted divergence-free flag.
#[derive(Debug, Clone)]
pub struct VectorField {
    grid: Grid,
    comps: [Vec<Complex64>; 3],
    solenoidal: bool,
}

impl VectorField {
    pub fn zeros(grid: &Grid) -> Self {
        Self { grid: grid.clone(), comps: [zeros(grid.len()), zeros(grid.len()), zeros(grid.len())], solenoidal: true }
    }

    /// Wraps raw coefficients. The solenoidal flag is set only if the data
    /// actually passes the divergence check.
    pub fn from_coeffs(grid: &Grid, comps: [Vec<Complex64>; 3]) -> Self {
        for c in &comps {
            assert_eq!(c.len(), grid.len(), "coefficient count does not match grid");
        }
        let mut f = Self { grid: grid.clone(), comps, solenoidal: false };
        f.solenoidal = f.divergence_defect() <= SOLENOIDAL_TOL;
        f
    }

    /// Wraps coefficients known to be divergence-free by construction.
    pub(crate) fn from_solenoidal_coeffs(grid: &Grid, comps: [Vec<Complex64>; 3]) -> Self {
        Self { grid: grid.clone(), comps, solenoidal: true }
    }

    pub(crate) fn from_coeffs_unchecked(grid: &Grid, comps: [Vec<Complex64>; 3], solenoidal: bool) -> Self {
        Self { grid: grid.clone(), comps, solenoidal }
    }

    pub fn from_physical(grid: &Grid, values: [&[f64]; 3]) -> Self {
        let comps = values.map(|v| {
            assert_eq!(v.len(), grid.len(), "sample count does not match grid");
            grid.forward(v)
        });
        Self::from_coeffs(grid, comps)
    }

    pub fn from_fn(grid: &Grid, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        let pts: Vec<[f64; 3]> = (0..grid.len()).map(|idx| f(grid.point(idx))).collect();
        let c = |d: usize| pts.iter().map(|p| p[d]).collect::<Vec<f64>>();
        let (x, y, z) = (c(0), c(1), c(2));
        Self::from_physical(grid, [&x, &y, &z])
    }

    pub fn from_scalars(parts: [ScalarField; 3]) -> Result<Self> {
        ensure_same(parts[0].grid(), parts[1].grid())?;
        ensure_same(parts[0].grid(), parts[2].grid())?;
        let grid = parts[0].grid().clone();
        let [a, b, c] = parts;
        Ok(Self::from_coeffs(&grid, [a.coeffs, b.coeffs, c.coeffs]))
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn component(&self, d: usize) -> &[Complex64] {
        &self.comps[d]
    }

    pub fn components(&self) -> &[Vec<Complex64>; 3] {
        &self.comps
    }

    pub fn into_components(self) -> [Vec<Complex64>; 3] {
        self.comps
    }

    pub fn scalar(&self, d: usize) -> ScalarField {
        ScalarField::from_coeffs(&self.grid, self.comps[d].clone())
    }

    pub fn is_solenoidal(&self) -> bool {
        self.solenoidal
    }

    pub fn to_physical(&self) -> [Vec<f64>; 3] {
        [self.grid.inverse(&self.comps[0]), self.grid.inverse(&self.comps[1]), self.grid.inverse(&self.comps[2])]
    }

    /// `max_k |k . u(k)| / |k|` relative to `max_k |u(k)|`.
    pub fn divergence_defect(&self) -> f64 {
        let (mut worst, mut scale): (f64, f64) = (0.0, 0.0);
        for idx in 1..self.grid.len() {
            let u = [self.comps[0][idx], self.comps[1][idx], self.comps[2][idx]];
            scale = scale.max((u[0].norm_sqr() + u[1].norm_sqr() + u[2].norm_sqr()).sqrt());
            let k = self.grid.k_deriv(idx);
            let kk = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
            if kk == 0.0 {
                continue;
            }
            worst = worst.max((u[0] * k[0] + u[1] * k[1] + u[2] * k[2]).norm() / kk);
        }
        if scale == 0.0 {
            0.0
        } else {
            worst / scale
        }
    }

    pub fn hermitian_defect(&self) -> f64 {
        self.comps.iter().map(|c| hermitian_defect(&self.grid, c)).fold(0.0, f64::max)
    }

    /// Spatial mean of each component.
    pub fn mean(&self) -> [f64; 3] {
        [self.comps[0][0].re, self.comps[1][0].re, self.comps[2][0].re]
    }

    /// `L^2` norm via Parseval.
    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sqr().sqrt()
    }

    pub fn l2_norm_sqr(&self) -> f64 {
        self.grid.volume() * self.comps.iter().flatten().map(|c| c.norm_sqr()).sum::<f64>()
    }

    /// `L^2` inner product via Parseval.
    pub fn inner(&self, other: &Self) -> f64 {
        let mut s = 0.0;
        for d in 0..3 {
            for (a, b) in self.comps[d].iter().zip(&other.comps[d]) {
                s += (a * b.conj()).re;
            }
        }
        self.grid.volume() * s
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().flatten().all(|c| c.re == 0.0 && c.im == 0.0)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.comps.iter().flatten().map(|c| c.norm()).fold(0.0, f64::max)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        assert!(self.grid == other.grid, "vector fields live on different grids");
        let comps = [0, 1, 2].map(|d| self.comps[d].iter().zip(&other.comps[d]).map(|(&a, &b)| f(a, b)).collect());
        Self { grid: self.grid.clone(), comps, solenoidal: self.solenoidal && other.solenoidal }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        ensure_same(&self.grid, &other.grid)?;
        Ok(self.zip_with(other, |a, b| a + b))
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        ensure_same(&self.grid, &other.grid)?;
        Ok(self.zip_with(other, |a, b| a - b))
    }

    pub fn scaled(&self, a: f64) -> Self {
        let comps = [0, 1, 2].map(|d| self.comps[d].iter().map(|c| c * a).collect());
        Self { grid: self.grid.clone(), comps, solenoidal: self.solenoidal }
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &Self) {
        assert!(self.grid == other.grid, "vector fields live on different grids");
        for d in 0..3 {
            for (x, y) in self.comps[d].iter_mut().zip(&other.comps[d]) {
                *x += y * a;
            }
        }
        self.solenoidal = self.solenoidal && other.solenoidal;
    }

    /// Applies a real per-mode multiplier to every component.
    pub fn map_modes(&self, m: impl Fn(usize) -> f64) -> Self {
        let comps = [0, 1, 2].map(|d| self.comps[d].iter().enumerate().map(|(idx, c)| c * m(idx)).collect());
        Self { grid: self.grid.clone(), comps, solenoidal: self.solenoidal }
    }

    /// Transfers the coefficients to another grid of the same box length,
    /// dropping modes the target cannot hold.
    pub fn resample(&self, target: &Grid) -> Result<Self> {
        if (target.box_length() - self.grid.box_length()).abs() > 1e-14 * self.grid.box_length() {
            return Err(Error::GridMismatch);
        }
        let nt = target.n() as i64;
        let half = nt / 2;
        let mut comps = [zeros(target.len()), zeros(target.len()), zeros(target.len())];
        for idx in 0..self.grid.len() {
            let m = self.grid.modes_of(idx);
            if m.iter().any(|&v| v >= half || v < -half) {
                continue;
            }
            // a source Nyquist mode is only representable when the target is at least as coarse
            if m.iter().any(|&v| v == -(self.grid.n() as i64) / 2) && nt > self.grid.n() as i64 {
                continue;
            }
            let t = target.index_of_mode(m);
            for d in 0..3 {
                comps[d][t] = self.comps[d][idx];
            }
        }
        Ok(Self { grid: target.clone(), comps, solenoidal: self.solenoidal })
    }
}

impl Add for &VectorField {
    type Output = VectorField;
    fn add(self, rhs: &VectorField) -> VectorField {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &VectorField {
    type Output = VectorField;
    fn sub(self, rhs: &VectorField) -> VectorField {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Mul<f64> for &VectorField {
    type Output = VectorField;
    fn mul(self, rhs: f64) -> VectorField {
        self.scaled(rhs)
    }
}

impl Neg for &VectorField {
    type Output = VectorField;
    fn neg(self) -> VectorField {
        self.scaled(-1.0)
    }
}

/// 3x3 field `T_ij`, stored row-major.
#[derive(Debug, Clone)]
pub struct TensorField {
    grid: Grid,
    comps: Vec<Vec<Complex64>>,
}

impl TensorField {
    pub fn zeros(grid: &Grid) -> Self {
        Self { grid: grid.clone(), comps: (0..9).map(|_| zeros(grid.len())).collect() }
    }

    pub(crate) fn from_rows(grid: &Grid, comps: Vec<Vec<Complex64>>) -> Self {
        assert_eq!(comps.len(), 9);
        Self { grid: grid.clone(), comps }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn component(&self, i: usize, j: usize) -> &[Complex64] {
        &self.comps[3 * i + j]
    }

    pub fn scalar(&self, i: usize, j: usize) -> ScalarField {
        ScalarField::from_coeffs(&self.grid, self.comps[3 * i + j].clone())
    }

    pub fn hermitian_defect(&self) -> f64 {
        self.comps.iter().map(|c| hermitian_defect(&self.grid, c)).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().flatten().all(|c| c.re == 0.0 && c.im == 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn real_fields_are_hermitian() {
        let g = Grid::new(8, 2.0 * PI).unwrap();
        let f = VectorField::from_fn(&g, |x| [x[1].sin() * x[2].cos(), (2.0 * x[0]).cos(), 0.3]);
        assert!(f.hermitian_defect() < 1e-12);
    }

    #[test]
    fn solenoidal_flag_reflects_data() {
        let g = Grid::new(8, 2.0 * PI).unwrap();
        let div_free = VectorField::from_fn(&g, |x| [x[1].sin(), x[2].sin(), x[0].sin()]);
        assert!(div_free.is_solenoidal());
        let compressive = VectorField::from_fn(&g, |x| [x[0].sin(), 0.0, 0.0]);
        assert!(!compressive.is_solenoidal());
    }

    #[test]
    fn parseval_matches_quadrature() {
        let g = Grid::new(8, 2.0 * PI).unwrap();
        let f = VectorField::from_fn(&g, |x| [x[1].sin(), 0.0, 0.0]);
        let expected = ((2.0 * PI).powi(3) / 2.0).sqrt();
        assert!((f.l2_norm() - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn resample_up_and_down_is_lossless_for_low_modes() {
        let g8 = Grid::new(8, 2.0 * PI).unwrap();
        let g16 = Grid::new(16, 2.0 * PI).unwrap();
        let f = VectorField::from_fn(&g8, |x| [x[1].sin(), (x[2] + x[0]).cos(), 0.0]);
        let up = f.resample(&g16).unwrap();
        let back = up.resample(&g8).unwrap();
        assert!((&back - &f).max_abs_coeff() < 1e-15);
        let direct = VectorField::from_fn(&g16, |x| [x[1].sin(), (x[2] + x[0]).cos(), 0.0]);
        assert!((&up - &direct).max_abs_coeff() < 1e-14);
    }

    #[test]
    fn mismatched_grids_error() {
        let a = VectorField::zeros(&Grid::new(8, 1.0).unwrap());
        let b = VectorField::zeros(&Grid::new(8, 2.0).unwrap());
        assert!(matches!(a.try_add(&b), Err(Error::GridMismatch)));
    }
}
