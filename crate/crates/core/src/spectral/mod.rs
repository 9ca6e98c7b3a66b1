//! Discrete Fourier analysis on the periodic box `[-L, L]^d`.
//!
//! Modes are `e^{iπ k·x / L}` (period `2L`), so the physical frequency of
//! index `k` is `ξ_k = π k / L`. Coefficients use the unitary normalisation,
//! which makes the L² norm of a field equal to the ℓ² norm of its coefficients.

mod field;
mod grid;
mod ops;
mod transform;

pub use field::{PhysicalField, SpectralField};
pub use grid::{Grid, WaveNumber};
pub use ops::{
    apply_fractional_laplacian, dyadic_block, dyadic_sobolev_blocks, dyadic_sobolev_norm,
    homogeneous_sobolev_norm, lp_norm, project_band, project_high, project_low, sobolev_norm,
    triple_product_integral, triple_product_quadrature, SobolevKind,
};
pub use transform::{dealiased_size, forward_transform, inverse_transform, HERMITIAN_TOLERANCE};

pub(crate) use transform::{inverse_unchecked, project_samples, sample_padded};
