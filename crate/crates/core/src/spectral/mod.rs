//! Periodic grids, Fourier coefficients and multiplier operators.

mod fft;
mod field;
mod grid;
pub mod ops;
pub mod random;

pub use field::{lp_norm_of_samples, SpectralField};
pub use grid::TorusGrid;
pub use ops::{
    apply_matrix_multiplier, apply_multiplier, curl, dealias, divergence, grad_inverse_laplacian, gradient,
    inverse_laplacian, lambda_power, laplacian, leray_project, product, ZeroMode,
};
