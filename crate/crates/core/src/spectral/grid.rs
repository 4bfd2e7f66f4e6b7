//! Periodic cube `[0, L)^3` sampled on `n^3` collocation points, with the
//! wavenumber tables and 3D FFT plans every field operation shares.
//!
//! Spectral coefficients are stored in the full complex layout with the
//! normalization `f(x) = sum_m f_m exp(i k_m . x)`, i.e. the forward transform
//! divides by `n^3`. Index `(i, j, l)` lives at `i*n*n + j*n + l`; `i` runs
//! along x.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Which 2/3-rule truncation is applied to quadratic products.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dealias {
    #[default]
    TwoThirds,
    Off,
}

struct Tables {
    n: usize,
    box_length: f64,
    dealias: Dealias,
    /// signed integer mode per 1D index
    modes: Vec<i64>,
    /// 1D wavenumber 2*pi*m/L
    k: Vec<f64>,
    /// 1D wavenumber used by first-order operators (Nyquist mode zeroed)
    k_deriv: Vec<f64>,
    /// |k|^2 per 3D index
    k2: Vec<f64>,
    /// retained-mode flag per 3D index
    mask: Vec<bool>,
    cutoff: i64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// Cheaply clonable handle to the shared grid tables.
#[derive(Clone)]
pub struct Grid {
    inner: Arc<Tables>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n", &self.inner.n)
            .field("box_length", &self.inner.box_length)
            .field("dealias", &self.inner.dealias)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.n == other.inner.n
                && self.inner.box_length == other.inner.box_length
                && self.inner.dealias == other.inner.dealias)
    }
}

impl Grid {
    /// Builds a grid with 2/3-rule dealiasing.
    pub fn new(n: usize, box_length: f64) -> Result<Self, Error> {
        Self::with_dealias(n, box_length, Dealias::TwoThirds)
    }

    pub fn with_dealias(n: usize, box_length: f64, dealias: Dealias) -> Result<Self, Error> {
        if n < 4 || n % 2 != 0 {
            return Err(Error::InvalidGrid(format!("n must be even and >= 4, got {n}")));
        }
        if !(box_length > 0.0) || !box_length.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "box_length must be positive, got {box_length}"
            )));
        }
        let half = (n / 2) as i64;
        let modes: Vec<i64> = (0..n as i64).map(|i| if i < half { i } else { i - n as i64 }).collect();
        let step = 2.0 * PI / box_length;
        let k: Vec<f64> = modes.iter().map(|&m| step * m as f64).collect();
        let k_deriv: Vec<f64> =
            modes.iter().map(|&m| if m == -half { 0.0 } else { step * m as f64 }).collect();
        let cutoff = match dealias {
            Dealias::TwoThirds => (n as i64 - 1) / 3,
            Dealias::Off => half - 1,
        };
        let len = n * n * n;
        let mut k2 = Vec::with_capacity(len);
        let mut mask = Vec::with_capacity(len);
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    k2.push(k[i] * k[i] + k[j] * k[j] + k[l] * k[l]);
                    mask.push(modes[i].abs() <= cutoff && modes[j].abs() <= cutoff && modes[l].abs() <= cutoff);
                }
            }
        }
        let mut planner = FftPlanner::<f64>::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        Ok(Self {
            inner: Arc::new(Tables {
                n,
                box_length,
                dealias,
                modes,
                k,
                k_deriv,
                k2,
                mask,
                cutoff,
                forward,
                inverse,
            }),
        })
    }

    pub fn n(&self) -> usize {
        self.inner.n
    }

    pub fn box_length(&self) -> f64 {
        self.inner.box_length
    }

    pub fn dealias(&self) -> Dealias {
        self.inner.dealias
    }

    /// Number of collocation points (and of spectral coefficients).
    pub fn len(&self) -> usize {
        self.inner.n * self.inner.n * self.inner.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn volume(&self) -> f64 {
        self.inner.box_length.powi(3)
    }

    pub fn cell_volume(&self) -> f64 {
        (self.inner.box_length / self.inner.n as f64).powi(3)
    }

    /// Grid spacing `L / n`.
    pub fn spacing(&self) -> f64 {
        self.inner.box_length / self.inner.n as f64
    }

    /// Wavenumber step `2*pi / L`.
    pub fn k_step(&self) -> f64 {
        2.0 * PI / self.inner.box_length
    }

    /// Signed integer mode of a 1D index.
    pub fn mode(&self, index: usize) -> i64 {
        self.inner.modes[index]
    }

    /// 1D wavenumber of a 1D index.
    pub fn wavenumber(&self, index: usize) -> f64 {
        self.inner.k[index]
    }

    /// Largest retained |m| per dimension for products.
    pub fn cutoff(&self) -> i64 {
        self.inner.cutoff
    }

    pub fn split(&self, idx: usize) -> (usize, usize, usize) {
        let n = self.inner.n;
        (idx / (n * n), (idx / n) % n, idx % n)
    }

    pub fn index(&self, i: usize, j: usize, l: usize) -> usize {
        let n = self.inner.n;
        (i * n + j) * n + l
    }

    /// 3D index of the integer mode `m` (components reduced mod n).
    pub fn index_of_mode(&self, m: [i64; 3]) -> usize {
        let n = self.inner.n as i64;
        let r = |v: i64| v.rem_euclid(n) as usize;
        self.index(r(m[0]), r(m[1]), r(m[2]))
    }

    pub fn modes_of(&self, idx: usize) -> [i64; 3] {
        let (i, j, l) = self.split(idx);
        [self.inner.modes[i], self.inner.modes[j], self.inner.modes[l]]
    }

    /// Wavevector used by first-order operators. Components on the Nyquist
    /// plane are zero so that conjugate partners stay conjugate.
    pub fn k_deriv(&self, idx: usize) -> [f64; 3] {
        let (i, j, l) = self.split(idx);
        let t = &self.inner.k_deriv;
        [t[i], t[j], t[l]]
    }

    pub fn k_vec(&self, idx: usize) -> [f64; 3] {
        let (i, j, l) = self.split(idx);
        let t = &self.inner.k;
        [t[i], t[j], t[l]]
    }

    pub fn k2(&self, idx: usize) -> f64 {
        self.inner.k2[idx]
    }

    pub fn k2_table(&self) -> &[f64] {
        &self.inner.k2
    }

    pub fn retained(&self, idx: usize) -> bool {
        self.inner.mask[idx]
    }

    pub fn mask(&self) -> &[bool] {
        &self.inner.mask
    }

    /// Index of the conjugate partner mode `-m`.
    pub fn partner(&self, idx: usize) -> usize {
        let n = self.inner.n;
        let (i, j, l) = self.split(idx);
        self.index((n - i) % n, (n - j) % n, (n - l) % n)
    }

    /// Physical coordinate of a grid point.
    pub fn point(&self, idx: usize) -> [f64; 3] {
        let (i, j, l) = self.split(idx);
        let h = self.spacing();
        [i as f64 * h, j as f64 * h, l as f64 * h]
    }

    /// Samples `f` at every collocation point.
    pub fn sample(&self, f: impl Fn([f64; 3]) -> f64) -> Vec<f64> {
        (0..self.len()).map(|idx| f(self.point(idx))).collect()
    }

    /// Real samples to spectral coefficients.
    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut data, &*self.inner.forward);
        let scale = 1.0 / self.len() as f64;
        for c in data.iter_mut() {
            *c *= scale;
        }
        data
    }

    /// Spectral coefficients to real samples (imaginary round-off dropped).
    pub fn inverse(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let mut data = coeffs.to_vec();
        self.transform(&mut data, &*self.inner.inverse);
        data.into_iter().map(|c| c.re).collect()
    }

    fn transform(&self, data: &mut [Complex64], fft: &dyn Fft<f64>) {
        let n = self.inner.n;
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        // contiguous axis
        fft.process_with_scratch(data, &mut scratch);
        let mut buf = vec![Complex64::default(); n * n];
        // middle axis, one x-slab at a time
        for slab in data.chunks_exact_mut(n * n) {
            for j in 0..n {
                for l in 0..n {
                    buf[l * n + j] = slab[j * n + l];
                }
            }
            fft.process_with_scratch(&mut buf, &mut scratch);
            for j in 0..n {
                for l in 0..n {
                    slab[j * n + l] = buf[l * n + j];
                }
            }
        }
        // slowest axis, one y-plane at a time
        for j in 0..n {
            for i in 0..n {
                for l in 0..n {
                    buf[l * n + i] = data[(i * n + j) * n + l];
                }
            }
            fft.process_with_scratch(&mut buf, &mut scratch);
            for i in 0..n {
                for l in 0..n {
                    data[(i * n + j) * n + l] = buf[l * n + i];
                }
            }
        }
    }
}
