//! Discretization primitives: Chebyshev collocation in `x2`, Fourier in
//! `x1` and `x3`.

pub mod cheb;
pub mod fft;
pub mod grid;
pub mod wall;

pub use cheb::{
    chebyshev_coefficients, chebyshev_nodes, chebyshev_t, clamped_basis, diff_matrix, dirichlet_basis,
    interpolation_matrix, mass_matrix, quadrature_weights, DiffMatrix,
};
pub use fft::{PlaneFft, RealPlaneFft};
pub use grid::{dealias_mask, fft_index, wavenumbers, Grid, WaveMode};
pub use wall::{FineQuadrature, WallBasis};
