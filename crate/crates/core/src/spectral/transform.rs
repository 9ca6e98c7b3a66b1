//! FFT-backed transforms under the unitary convention
//!
//! `f(x) = (2L)^{-d/2} Σ_k a_k e^{iπ k·x/L}` with samples at `x_j = -L + j·2L/m`.
//! Since `e^{iπ k x_j / L} = (-1)^{Σk} e^{2πi k·j/m}`, both directions are a
//! plain DFT plus a parity sign and a scale factor.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use super::field::{PhysicalField, SpectralField};
use super::grid::{axis_index, Grid};
use crate::error::{Error, Result};
use crate::par::Execution;

/// Hermitian defect above which a spectrum is rejected as non-real.
pub const HERMITIAN_TOLERANCE: f64 = 1e-10;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft(len, direction))
}

fn transpose_square(data: &mut [Complex64], m: usize) {
    for i in 0..m {
        for j in (i + 1)..m {
            data.swap(i * m + j, j * m + i);
        }
    }
}

/// Unnormalised in-place DFT of an `m^dim` array.
pub(crate) fn dft(data: &mut [Complex64], dim: usize, m: usize, direction: FftDirection) {
    let fft = plan(m, direction);
    if dim == 1 {
        fft.process(data);
        return;
    }
    let exec = Execution::default();
    let rows_per_chunk = m.div_ceil(exec.threads().max(1)).max(1);
    let chunk = rows_per_chunk * m;
    exec.for_each_chunk_mut(data, chunk, |c| fft.process(c));
    transpose_square(data, m);
    exec.for_each_chunk_mut(data, chunk, |c| fft.process(c));
    transpose_square(data, m);
}

fn parity_sign(flat: usize, dim: usize, m: usize) -> f64 {
    let s = if dim == 1 {
        axis_index(flat, m)
    } else {
        axis_index(flat / m, m) + axis_index(flat % m, m)
    };
    if s.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Physical samples on an `m^dim` grid from coefficients laid out for that grid.
pub(crate) fn synthesize(mut spectrum: Vec<Complex64>, dim: usize, m: usize, half_length: f64) -> Vec<Complex64> {
    let scale = (2.0 * half_length).powf(-(dim as f64) / 2.0);
    for (flat, a) in spectrum.iter_mut().enumerate() {
        *a *= parity_sign(flat, dim, m) * scale;
    }
    dft(&mut spectrum, dim, m, FftDirection::Inverse);
    spectrum
}

/// Coefficients on an `m^dim` layout from physical samples.
pub(crate) fn analyze(mut samples: Vec<Complex64>, dim: usize, m: usize, half_length: f64) -> Vec<Complex64> {
    dft(&mut samples, dim, m, FftDirection::Forward);
    let scale = (2.0 * half_length).powf(dim as f64 / 2.0) / (m as f64).powi(dim as i32);
    for (flat, a) in samples.iter_mut().enumerate() {
        *a *= parity_sign(flat, dim, m) * scale;
    }
    samples
}

/// Copies the retained coefficients of `u` into an `m`-point layout, dropping
/// the Nyquist index (it has no conjugate partner on the larger grid).
pub(crate) fn pad(coeffs: &[Complex64], grid: &Grid, m: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); m.pow(grid.dim() as u32)];
    let mi = m as i64;
    for (flat, &a) in coeffs.iter().enumerate() {
        if grid.is_nyquist(flat) {
            continue;
        }
        let k = grid.wavenumber(flat);
        let slot = k.index().iter().fold(0usize, |acc, &ki| acc * m + ki.rem_euclid(mi) as usize);
        out[slot] = a;
    }
    out
}

/// Inverse of [`pad`]: keeps indices retained by `grid`, Nyquist set to zero.
pub(crate) fn truncate(padded: &[Complex64], grid: &Grid, m: usize) -> Vec<Complex64> {
    let mi = m as i64;
    (0..grid.len())
        .map(|flat| {
            if grid.is_nyquist(flat) {
                return Complex64::new(0.0, 0.0);
            }
            let k = grid.wavenumber(flat);
            let slot = k.index().iter().fold(0usize, |acc, &ki| acc * m + ki.rem_euclid(mi) as usize);
            padded[slot]
        })
        .collect()
}

/// Unitary coefficients of a real periodic field.
pub fn forward_transform(f: &PhysicalField) -> SpectralField {
    let g = *f.grid();
    let samples = f.samples().iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let coeffs = analyze(samples, g.dim(), g.modes(), g.half_length());
    SpectralField::from_parts(g, coeffs)
}

/// Real samples of a Hermitian-symmetric spectrum.
pub fn inverse_transform(u: &SpectralField) -> Result<PhysicalField> {
    let defect = u.hermitian_defect();
    if defect > HERMITIAN_TOLERANCE {
        return Err(Error::InvalidField(format!(
            "Hermitian symmetry violated (relative defect {defect:.3e})"
        )));
    }
    Ok(inverse_unchecked(u))
}

/// Synthesis without the symmetry check; the imaginary residue is discarded.
pub(crate) fn inverse_unchecked(u: &SpectralField) -> PhysicalField {
    let g = *u.grid();
    let samples = synthesize(u.coefficients().to_vec(), g.dim(), g.modes(), g.half_length());
    PhysicalField::from_parts(g, samples.into_iter().map(|z| z.re).collect())
}

/// Samples of `u` on an `m`-point-per-axis grid of the same box.
pub(crate) fn sample_padded(u: &SpectralField, m: usize) -> Vec<f64> {
    let g = u.grid();
    let padded = pad(u.coefficients(), g, m);
    synthesize(padded, g.dim(), m, g.half_length()).into_iter().map(|z| z.re).collect()
}

/// Coefficients retained by `grid` of real samples given on an `m`-point grid.
pub(crate) fn project_samples(samples: &[f64], grid: &Grid, m: usize) -> SpectralField {
    let data = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let padded = analyze(data, grid.dim(), m, grid.half_length());
    let mut coeffs = truncate(&padded, grid, m);
    hermitian_average(&mut coeffs, grid);
    SpectralField::from_parts(*grid, coeffs)
}

/// Replaces `a_k` by `(a_k + conj a_{-k})/2`, which is Hermitian bit for bit.
///
/// The FFT of real samples is Hermitian only to round-off. The anti-Hermitian
/// remainder is invisible to the nonlinearity and so evolves under the linear
/// symbol alone, growing from round-off at the largest unstable rate.
pub(crate) fn hermitian_average(coeffs: &mut [Complex64], grid: &Grid) {
    for s in 0..coeffs.len() {
        let m = grid.mirror(s);
        if m > s {
            let avg = 0.5 * (coeffs[s] + coeffs[m].conj());
            coeffs[s] = avg;
            coeffs[m] = avg.conj();
        } else if m == s {
            coeffs[s] = Complex64::new(coeffs[s].re, 0.0);
        }
    }
}

/// Padded size for exact evaluation of quadratic products (3/2 rule).
pub fn dealiased_size(modes: usize) -> usize {
    3 * modes / 2
}
