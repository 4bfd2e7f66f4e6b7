//! Seeded divergence-free initial data.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::field::{zeros, VectorField};
use super::grid::Grid;
use super::ops::leray_project;
use crate::error::{Error, Result};

/// Written into run metadata so the data can be regenerated elsewhere.
pub const GENERATOR_ALGORITHM: &str = "chacha8(seed) -> per retained mode m != 0 with canonical sign \
(first nonzero of (mx,my,mz) positive), visited in ascending storage index: 3 complex N(0,1) draws (re then im, x,y,z) \
scaled by |k|^-decay; conjugate partner mirrored; Leray projection; rescaled so the RMS speed equals amplitude";

fn canonical(m: [i64; 3]) -> bool {
    m.iter().find(|&&v| v != 0).is_some_and(|&v| v > 0)
}

/// Random solenoidal field with spectrum `|u(k)| ~ |k|^-decay` on the
/// dealiased band, normalized to RMS speed `amplitude`.
pub fn random_divfree_field(grid: &Grid, seed: u64, amplitude: f64, decay: f64) -> Result<VectorField> {
    if !(decay > 0.0) {
        return Err(Error::InvalidArgument(format!("decay must be positive, got {decay}")));
    }
    spectral_draw(grid, seed, amplitude, |k2| k2.powf(-0.5 * decay))
}

pub(crate) fn spectral_draw(grid: &Grid, seed: u64, amplitude: f64, shape: impl Fn(f64) -> f64) -> Result<VectorField> {
    if amplitude == 0.0 {
        return Ok(VectorField::zeros(grid));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut comps = [zeros(grid.len()), zeros(grid.len()), zeros(grid.len())];
    for idx in 1..grid.len() {
        let m = grid.modes_of(idx);
        if !grid.retained(idx) || !canonical(m) || m.iter().any(|&v| v == -(grid.n() as i64) / 2) {
            continue;
        }
        let scale = shape(grid.k2(idx));
        let partner = grid.partner(idx);
        for c in comps.iter_mut() {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            let z = Complex64::new(re, im) * scale;
            c[idx] = z;
            c[partner] = z.conj();
        }
    }
    let raw = VectorField::from_coeffs(grid, comps);
    let projected = leray_project(&raw);
    let rms = projected.l2_norm() / grid.volume().sqrt();
    if rms == 0.0 {
        return Ok(projected);
    }
    Ok(projected.scaled(amplitude / rms))
}

/// `amplitude * (sin x cos y cos z, -cos x sin y cos z, 0)` in box units.
pub fn taylor_green(grid: &Grid, amplitude: f64) -> VectorField {
    let s = 2.0 * std::f64::consts::PI / grid.box_length();
    VectorField::from_fn(grid, |p| {
        let (x, y, z) = (s * p[0], s * p[1], s * p[2]);
        [amplitude * x.sin() * y.cos() * z.cos(), -amplitude * x.cos() * y.sin() * z.cos(), 0.0]
    })
}

/// The Taylor-Green vortex shifted by a quarter period in every direction,
/// `amplitude * (cos x sin y sin z, -sin x cos y sin z, 0)`.
pub fn taylor_green_shifted(grid: &Grid, amplitude: f64) -> VectorField {
    let s = 2.0 * std::f64::consts::PI / grid.box_length();
    VectorField::from_fn(grid, |p| {
        let (x, y, z) = (s * p[0], s * p[1], s * p[2]);
        [amplitude * x.cos() * y.sin() * z.sin(), -amplitude * x.sin() * y.cos() * z.sin(), 0.0]
    })
}
