use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::spectral::{Grid, SpectralField};

/// Real random field band-limited to `|k| ≤ top`, no Nyquist content.
pub(crate) fn random_field(grid: Grid, top: f64, seed: u64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = SpectralField::zeros(grid);
    for (flat, a) in u.coefficients_mut().iter_mut().enumerate() {
        if grid.wavenumber(flat).magnitude() <= top {
            *a = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
    }
    symmetrize(&mut u);
    u
}

pub(crate) fn symmetrize(u: &mut SpectralField) {
    let g = *u.grid();
    let c = u.coefficients().to_vec();
    for (flat, a) in u.coefficients_mut().iter_mut().enumerate() {
        *a = if g.is_nyquist(flat) { Complex64::new(0.0, 0.0) } else { 0.5 * (c[flat] + c[g.mirror(flat)].conj()) };
    }
}
