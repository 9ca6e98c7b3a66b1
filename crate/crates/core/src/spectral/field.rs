use num_complex::Complex64;

use super::grid::{Grid, WaveNumber};
use crate::error::{contract, Result};

/// Fourier coefficients of a real periodic field under the unitary convention.
///
/// Coefficients are stored in the grid's FFT order. Hermitian symmetry is
/// checked where a real field is required (synthesis, nonlinear terms), not
/// at construction.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: Grid) -> Self {
        Self { grid, coeffs: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn new(grid: Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(contract(format!(
                "expected {} coefficients for the grid, got {}",
                grid.len(),
                coeffs.len()
            )));
        }
        Ok(Self { grid, coeffs })
    }

    pub(crate) fn from_parts(grid: Grid, coeffs: Vec<Complex64>) -> Self {
        debug_assert_eq!(coeffs.len(), grid.len());
        Self { grid, coeffs }
    }

    /// Builds a field by evaluating `f` at every retained wave number.
    pub fn from_fn(grid: Grid, f: impl Fn(WaveNumber) -> Complex64) -> Self {
        let coeffs = (0..grid.len()).map(|flat| f(grid.wavenumber(flat))).collect();
        Self { grid, coeffs }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    #[cfg(test)]
    pub(crate) fn coefficients_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coefficients(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn coefficient(&self, k: &[i64]) -> Option<Complex64> {
        self.grid.slot(k).map(|s| self.coeffs[s])
    }

    pub fn set_coefficient(&mut self, k: &[i64], value: Complex64) -> Result<()> {
        let slot = self
            .grid
            .slot(k)
            .ok_or_else(|| contract(format!("index {k:?} is not retained on this grid")))?;
        self.coeffs[slot] = value;
        Ok(())
    }

    /// `Σ |a_k|²`, equal to `‖f‖²_{L²}` by Plancherel.
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|a| a.norm_sqr()).sum()
    }

    /// ℓ² norm of the coefficients.
    pub fn l2_norm(&self) -> f64 {
        self.energy().sqrt()
    }

    /// `max_k |a_{-k} - conj(a_k)|` relative to the largest coefficient.
    pub fn hermitian_defect(&self) -> f64 {
        let scale = self.coeffs.iter().map(|a| a.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        let worst = (0..self.coeffs.len())
            .map(|i| (self.coeffs[self.grid.mirror(i)] - self.coeffs[i].conj()).norm())
            .fold(0.0, f64::max);
        worst / scale
    }

    /// Multiplies every coefficient by a real symbol.
    pub fn multiply(&self, symbol: impl Fn(WaveNumber) -> f64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(flat, &a)| a * symbol(self.grid.wavenumber(flat)))
            .collect();
        Self { grid: self.grid, coeffs }
    }

    /// Partial derivative along `axis`; the Nyquist slot is zeroed.
    pub fn derivative(&self, axis: usize) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(flat, &a)| {
                if self.grid.is_nyquist(flat) {
                    return Complex64::new(0.0, 0.0);
                }
                let xi = self.grid.wavenumber(flat).frequency()[axis];
                a * Complex64::new(0.0, xi)
            })
            .collect();
        Self { grid: self.grid, coeffs }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { grid: self.grid, coeffs: self.coeffs.iter().map(|&a| a * factor).collect() }
    }

    /// Coefficient-wise sum; panics on mismatched grids.
    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Self { grid: self.grid, coeffs }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect();
        Self { grid: self.grid, coeffs }
    }

    /// `Σ conj(a_k) b_k`, the L² inner product `∫ u v̄ dx` for real fields.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a.conj() * b).sum()
    }

    /// `∫ u dx = (2L)^{d/2} a_0`.
    pub fn integral(&self) -> f64 {
        self.grid.volume().sqrt() * self.coeffs[0].re
    }

    /// `‖∇u‖²_{L²} = Σ |ξ_k|² |a_k|²`.
    pub fn gradient_energy(&self) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(flat, a)| self.grid.wavenumber(flat).frequency_norm_sq() * a.norm_sqr())
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|a| a.re.is_finite() && a.im.is_finite())
    }
}

/// Real samples on the uniform grid, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct PhysicalField {
    grid: Grid,
    samples: Vec<f64>,
}

impl PhysicalField {
    pub fn new(grid: Grid, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(contract(format!(
                "expected {} samples for the grid, got {}",
                grid.len(),
                samples.len()
            )));
        }
        Ok(Self { grid, samples })
    }

    pub(crate) fn from_parts(grid: Grid, samples: Vec<f64>) -> Self {
        Self { grid, samples }
    }

    /// Samples `f` at the grid points.
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        let samples = (0..grid.len())
            .map(|j| {
                let x = grid.point(j);
                f(&x[..grid.dim()])
            })
            .collect();
        Self { grid, samples }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn size_mismatch_is_contract_error() {
        let g = Grid::new(1, 1.0, 8).unwrap();
        assert!(PhysicalField::new(g, vec![0.0; 7]).is_err());
        assert!(SpectralField::new(g, vec![Complex64::new(0.0, 0.0); 9]).is_err());
        let g2 = Grid::new(2, 1.0, 8).unwrap();
        assert!(PhysicalField::new(g2, vec![0.0; 8]).is_err());
        assert!(PhysicalField::new(g2, vec![0.0; 64]).is_ok());
    }

    #[test]
    fn derivative_of_single_mode() {
        let g = Grid::new(1, 2.0, 16).unwrap();
        let mut u = SpectralField::zeros(g);
        u.set_coefficient(&[3], Complex64::new(1.0, 0.0)).unwrap();
        let du = u.derivative(0);
        let xi = 3.0 * std::f64::consts::PI / 2.0;
        assert_eq!(du.coefficient(&[3]).unwrap(), Complex64::new(0.0, xi));
    }
}
