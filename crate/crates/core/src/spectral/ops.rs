//! Fourier-multiplier operators and dealiased quadratic products.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::field::{ensure_same, truncate, zeros, ScalarField, TensorField, VectorField};
use super::grid::Grid;
use crate::error::{Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Leray projection `u - k (k . u) / |k|^2`; the zero mode passes through.
pub fn leray_project(f: &VectorField) -> VectorField {
    let grid = f.grid();
    let [a, b, c] = f.components();
    let mut out = [a.clone(), b.clone(), c.clone()];
    for idx in 1..grid.len() {
        let k = grid.k_deriv(idx);
        let kk = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        if kk == 0.0 {
            continue;
        }
        let dot = (a[idx] * k[0] + b[idx] * k[1] + c[idx] * k[2]) / kk;
        for d in 0..3 {
            out[d][idx] -= dot * k[d];
        }
    }
    VectorField::from_solenoidal_coeffs(grid, out)
}

/// Complement of the Leray projection, `k (k . u) / |k|^2`.
pub fn gradient_part(f: &VectorField) -> VectorField {
    let p = leray_project(f);
    let [a, b, c] = f.components();
    let [pa, pb, pc] = p.components();
    let comps = [
        a.iter().zip(pa).map(|(x, y)| x - y).collect(),
        b.iter().zip(pb).map(|(x, y)| x - y).collect(),
        c.iter().zip(pc).map(|(x, y)| x - y).collect(),
    ];
    VectorField::from_coeffs_unchecked(f.grid(), comps, false)
}

pub fn gradient(phi: &ScalarField) -> VectorField {
    let grid = phi.grid();
    let mut comps = [zeros(grid.len()), zeros(grid.len()), zeros(grid.len())];
    for (idx, &c) in phi.coeffs().iter().enumerate() {
        let k = grid.k_deriv(idx);
        for d in 0..3 {
            comps[d][idx] = I * k[d] * c;
        }
    }
    VectorField::from_coeffs_unchecked(grid, comps, phi.coeffs().iter().skip(1).all(|c| c.norm() == 0.0))
}

pub fn divergence(f: &VectorField) -> ScalarField {
    let grid = f.grid();
    let [a, b, c] = f.components();
    let coeffs = (0..grid.len())
        .map(|idx| {
            let k = grid.k_deriv(idx);
            I * (a[idx] * k[0] + b[idx] * k[1] + c[idx] * k[2])
        })
        .collect();
    ScalarField::from_coeffs(grid, coeffs)
}

pub fn laplacian(f: &VectorField) -> VectorField {
    let grid = f.grid().clone();
    f.map_modes(|idx| -grid.k2(idx))
}

/// Kernel behind the mollifier `eta_eps * u`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MollifierKind {
    /// `exp(-eps^2 |k|^2 / 2)`, strictly positive.
    #[default]
    Gaussian,
    /// Tensor-product triangle `prod_i max(0, 1 - eps |k_i| / pi)`.
    Fejer,
}

impl MollifierKind {
    pub fn multiplier(self, epsilon: f64, k: [f64; 3]) -> f64 {
        match self {
            MollifierKind::Gaussian => {
                (-0.5 * epsilon * epsilon * (k[0] * k[0] + k[1] * k[1] + k[2] * k[2])).exp()
            }
            MollifierKind::Fejer => k
                .iter()
                .map(|&kd| (1.0 - epsilon * kd.abs() / std::f64::consts::PI).max(0.0))
                .product(),
        }
    }

    /// `||eta||_{L^2(R^3)}` of the unscaled kernel.
    pub fn kernel_l2_norm(self) -> f64 {
        match self {
            MollifierKind::Gaussian => std::f64::consts::PI.powf(0.75) / (2.0 * std::f64::consts::PI).powf(1.5),
            MollifierKind::Fejer => 1.0 / 27f64.sqrt(),
        }
    }
}

pub fn mollify(f: &VectorField, epsilon: f64, kind: MollifierKind) -> Result<VectorField> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("mollification scale must be positive, got {epsilon}")));
    }
    let grid = f.grid().clone();
    Ok(f.map_modes(|idx| kind.multiplier(epsilon, grid.k_vec(idx))))
}

/// Physical samples of `d_j u_i`, indexed `[i][j]`.
pub(crate) fn gradient_physical(f: &VectorField) -> [[Vec<f64>; 3]; 3] {
    let grid = f.grid();
    let mut buf = zeros(grid.len());
    std::array::from_fn(|i| {
        let comp = f.component(i);
        std::array::from_fn(|j| {
            for (idx, (b, &c)) in buf.iter_mut().zip(comp).enumerate() {
                *b = I * grid.k_deriv(idx)[j] * c;
            }
            grid.inverse(&buf)
        })
    })
}

/// Dealiased `(u . grad) w`.
pub fn advect(u: &VectorField, w: &VectorField) -> Result<VectorField> {
    ensure_same(u.grid(), w.grid())?;
    let grid = u.grid();
    let up = u.to_physical();
    let gw = gradient_physical(w);
    let mut out = [vec![0.0; grid.len()], vec![0.0; grid.len()], vec![0.0; grid.len()]];
    accumulate_transport(&mut out, 1.0, &up, &gw);
    Ok(to_spectral_dealiased(grid, out))
}

/// `out_i += sign * a_j * grad[i][j]` pointwise.
pub(crate) fn accumulate_transport(out: &mut [Vec<f64>; 3], sign: f64, a: &[Vec<f64>; 3], grad: &[[Vec<f64>; 3]; 3]) {
    for i in 0..3 {
        let o = &mut out[i];
        let (g0, g1, g2) = (&grad[i][0], &grad[i][1], &grad[i][2]);
        for p in 0..o.len() {
            o[p] += sign * (a[0][p] * g0[p] + a[1][p] * g1[p] + a[2][p] * g2[p]);
        }
    }
}

pub(crate) fn to_spectral_dealiased(grid: &Grid, values: [Vec<f64>; 3]) -> VectorField {
    let comps = values.map(|v| {
        let mut c = grid.forward(&v);
        truncate(grid, &mut c);
        c
    });
    VectorField::from_coeffs(grid, comps)
}

/// Dealiased `u_i w_j`.
pub fn outer(u: &VectorField, w: &VectorField) -> Result<TensorField> {
    ensure_same(u.grid(), w.grid())?;
    let grid = u.grid();
    let up = u.to_physical();
    let wp = w.to_physical();
    let mut comps = Vec::with_capacity(9);
    for i in 0..3 {
        for j in 0..3 {
            let prod: Vec<f64> = up[i].iter().zip(&wp[j]).map(|(a, b)| a * b).collect();
            let mut c = grid.forward(&prod);
            truncate(grid, &mut c);
            comps.push(c);
        }
    }
    Ok(TensorField::from_rows(grid, comps))
}

/// `(div T)_i = d_j T_ji`, so that `div(outer(u, w)) = d_j (u_j w_i)`.
pub fn tensor_divergence(t: &TensorField) -> VectorField {
    let grid = t.grid();
    let comps = std::array::from_fn(|i| {
        (0..grid.len())
            .map(|idx| {
                let k = grid.k_deriv(idx);
                I * (k[0] * t.component(0, i)[idx] + k[1] * t.component(1, i)[idx] + k[2] * t.component(2, i)[idx])
            })
            .collect()
    });
    VectorField::from_coeffs(grid, comps)
}

/// Truncates a field to the dealiased band.
pub fn dealias(f: &VectorField) -> VectorField {
    let grid = f.grid().clone();
    f.map_modes(|idx| if grid.retained(idx) { 1.0 } else { 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::random::random_divfree_field;
    use std::f64::consts::PI;

    fn grid() -> Grid {
        Grid::new(8, 2.0 * PI).unwrap()
    }

    fn single_mode(g: &Grid, m: [i64; 3], amp: [Complex64; 3]) -> VectorField {
        let mut comps = [zeros(g.len()), zeros(g.len()), zeros(g.len())];
        let (idx, p) = (g.index_of_mode(m), g.index_of_mode(m.map(|v| -v)));
        for d in 0..3 {
            comps[d][idx] = amp[d];
            comps[d][p] = amp[d].conj();
        }
        VectorField::from_coeffs(g, comps)
    }

    #[test]
    fn projection_kills_longitudinal_mode() {
        let g = grid();
        let a = Complex64::new(0.3, -0.2);
        let f = single_mode(&g, [1, 0, 0], [a, Complex64::default(), Complex64::default()]);
        assert!(leray_project(&f).max_abs_coeff() < 1e-16);
    }

    #[test]
    fn projection_keeps_transverse_mode() {
        let g = grid();
        let a = Complex64::new(0.3, -0.2);
        let f = single_mode(&g, [1, 0, 0], [Complex64::default(), a, Complex64::default()]);
        let p = leray_project(&f);
        assert!((&p - &f).max_abs_coeff() == 0.0);
        assert!(p.is_solenoidal());
    }

    #[test]
    fn projection_matches_dense_per_mode_matrix() {
        let g = grid();
        let f = VectorField::from_fn(&g, |x| {
            [(x[0] + 2.0 * x[1]).sin(), x[2].cos() * x[0].sin(), (x[1] - x[2]).cos()]
        });
        let p = leray_project(&f);
        for idx in 0..g.len() {
            let k = g.k_deriv(idx);
            let kk: f64 = k.iter().map(|v| v * v).sum();
            for i in 0..3 {
                let mut expect = Complex64::default();
                for j in 0..3 {
                    let delta = if i == j { 1.0 } else { 0.0 };
                    let m = if kk == 0.0 { delta } else { delta - k[i] * k[j] / kk };
                    expect += f.component(j)[idx] * m;
                }
                assert!((p.component(i)[idx] - expect).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn projection_annihilates_gradients_and_is_idempotent() {
        let g = Grid::new(16, 2.0 * PI).unwrap();
        let phi = ScalarField::from_fn(&g, |x| (x[0] + x[1]).sin() * (2.0 * x[2]).cos() + x[1].cos());
        let grad = gradient(&phi);
        assert!(leray_project(&grad).l2_norm() <= 1e-10 * grad.l2_norm());
        let f = VectorField::from_fn(&g, |x| [x[0].sin() * x[1].cos(), x[2].sin(), x[0].cos()]);
        let p = leray_project(&f);
        let pp = leray_project(&p);
        assert!((&pp - &p).l2_norm() <= 1e-12 * p.l2_norm());
    }

    #[test]
    fn mollify_limits() {
        let g = grid();
        let f = random_divfree_field(&g, 5, 1.0, 1.0).unwrap();
        let m = mollify(&f, 1e-8, MollifierKind::Gaussian).unwrap();
        assert!((&m - &f).l2_norm() <= 1e-6 * f.l2_norm());
        assert!(m.is_solenoidal());
        let c = VectorField::from_fn(&g, |_| [1.0, -2.0, 0.5]);
        let mc = mollify(&c, 0.7, MollifierKind::Gaussian).unwrap();
        assert!((&mc - &c).max_abs_coeff() < 1e-15);
        assert!(matches!(mollify(&f, 0.0, MollifierKind::Gaussian), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn gaussian_mollifier_scales_single_mode() {
        let g = grid();
        let f = VectorField::from_fn(&g, |x| [0.0, (x[0] + x[2]).cos(), 0.0]);
        let eps = 0.4;
        let m = mollify(&f, eps, MollifierKind::Gaussian).unwrap();
        let kappa2: f64 = 2.0;
        let expect = (-eps * eps * kappa2 / 2.0).exp();
        assert!((m.l2_norm() / f.l2_norm() - expect).abs() < 1e-14);
    }

    #[test]
    fn fejer_multiplier_in_unit_interval() {
        for &k in &[[0.0, 0.0, 0.0], [1.0, 2.0, -3.0], [10.0, 0.0, 0.0]] {
            let v = MollifierKind::Fejer.multiplier(0.3, k);
            assert!((0.0..=1.0).contains(&v));
        }
        assert_eq!(MollifierKind::Fejer.multiplier(0.3, [0.0; 3]), 1.0);
    }

    #[test]
    fn advect_trig_oracle() {
        // (u . grad) w with u = (sin y, 0, 0), w = (0, sin x, 0) is (0, sin y cos x, 0)
        let g = grid();
        let u = VectorField::from_fn(&g, |x| [x[1].sin(), 0.0, 0.0]);
        let w = VectorField::from_fn(&g, |x| [0.0, x[0].sin(), 0.0]);
        let got = advect(&u, &w).unwrap();
        let want = VectorField::from_fn(&g, |x| [0.0, x[1].sin() * x[0].cos(), 0.0]);
        assert!((&got - &want).max_abs_coeff() < 1e-15);
    }

    #[test]
    fn advect_trivial_cases() {
        let g = grid();
        let w = VectorField::from_fn(&g, |x| [x[1].sin(), x[2].cos(), 0.0]);
        assert!(advect(&VectorField::zeros(&g), &w).unwrap().max_abs_coeff() < 1e-16);
        let c = VectorField::from_fn(&g, |_| [0.5, 0.2, -1.0]);
        assert!(advect(&c, &c).unwrap().max_abs_coeff() < 1e-16);
        let other = VectorField::zeros(&Grid::new(8, 1.0).unwrap());
        assert!(matches!(advect(&w, &other), Err(Error::GridMismatch)));
    }

    #[test]
    fn divergence_form_matches_advective_form() {
        let g = Grid::new(16, 2.0 * PI).unwrap();
        let u = random_divfree_field(&g, 11, 1.0, 1.0).unwrap();
        let w = random_divfree_field(&g, 12, 1.0, 1.5).unwrap();
        let a = advect(&u, &w).unwrap();
        let b = tensor_divergence(&outer(&u, &w).unwrap());
        assert!((&a - &b).l2_norm() <= 1e-10 * a.l2_norm());
    }

    #[test]
    fn outer_is_symmetric_on_the_diagonal_pair() {
        let g = grid();
        let u = VectorField::from_fn(&g, |x| [x[1].sin(), x[2].cos(), x[0].sin() * 0.5]);
        let t = outer(&u, &u).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(t.component(i, j), t.component(j, i));
            }
        }
        assert!(outer(&VectorField::zeros(&g), &u).unwrap().is_zero());
    }

    #[test]
    fn transport_is_skew() {
        let g = Grid::new(16, 2.0 * PI).unwrap();
        let u = random_divfree_field(&g, 21, 1.0, 1.0).unwrap();
        let w = random_divfree_field(&g, 22, 1.0, 1.0).unwrap();
        let a = advect(&u, &w).unwrap();
        let bound = 1e-8 * u.l2_norm() * w.l2_norm_sqr();
        assert!(a.inner(&w).abs() <= bound, "{} > {}", a.inner(&w), bound);
    }
}
