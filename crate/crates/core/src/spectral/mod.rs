//! Periodic-box field algebra.

pub mod field;
pub mod grid;
pub mod norms;
pub mod ops;
pub mod random;
pub mod snapshot;

pub use field::{ScalarField, TensorField, VectorField, SOLENOIDAL_TOL};
pub use grid::{Dealias, Grid};
pub use norms::{gradient_lp_norm, hessian_lp_norm, lp_norm, mixed_norm, sobolev_seminorm, xt_norm, LpNorm, Sobolev};
pub use ops::{
    advect, dealias, divergence, gradient, gradient_part, laplacian, leray_project, mollify, outer,
    tensor_divergence, MollifierKind,
};
pub use random::{random_divfree_field, taylor_green, taylor_green_shifted};
