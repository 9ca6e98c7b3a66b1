//! Right-hand sides of the evolution equations in coefficient space.
//!
//! Every model has the form `â' = λ(k) â + N̂(a)` with a real diagonal linear
//! symbol and a quadratic nonlinearity evaluated pseudo-spectrally on a grid
//! padded by the 3/2 rule, which makes the truncated product alias-free.

use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};
use crate::spectral::{
    dealiased_size, inverse_unchecked, project_samples, sample_padded, Grid, SpectralField, WaveNumber,
    HERMITIAN_TOLERANCE,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Equation {
    /// `u_t + u_xxxx + u_xx + u u_x = 0`.
    Ks1d,
    /// `φ_t + Δ²φ + Δφ + ½|∇φ|² = 0`.
    Ks2d,
    /// `u_t + A_s u + div(u²) = 0` with `A_s = (-Δ)^{s/2}`.
    RegBurgers { order: f64, dim: usize },
    /// `u_t + u_xxxx + u_xx - η u + u u_x = 0`.
    DestabilizedKs1d { eta: f64 },
}

impl Equation {
    pub fn name(&self) -> &'static str {
        match self {
            Equation::Ks1d => "KS1D",
            Equation::Ks2d => "KS2D",
            Equation::RegBurgers { .. } => "RegBurgers",
            Equation::DestabilizedKs1d { .. } => "DestabilizedKS1D",
        }
    }
}

/// An evolution equation plus the switch that drops its nonlinearity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub equation: Equation,
    pub linear_only: bool,
}

impl ModelSpec {
    pub fn new(equation: Equation, linear_only: bool) -> Result<Self> {
        match equation {
            Equation::RegBurgers { order, dim } => {
                if dim != 1 && dim != 2 {
                    return Err(contract(format!("RegBurgers dimension must be 1 or 2, got {dim}")));
                }
                let half_d = dim as f64 / 2.0;
                if !(order > 1.0 && (order <= 2.0 || order > 1.0 + half_d)) {
                    return Err(contract(format!(
                        "RegBurgers order s must lie in (1, 2] or exceed {}, got {order}",
                        1.0 + half_d
                    )));
                }
            }
            Equation::DestabilizedKs1d { eta } => {
                if !(eta.is_finite() && eta >= 0.0) {
                    return Err(contract(format!("eta must be finite and >= 0, got {eta}")));
                }
            }
            Equation::Ks1d | Equation::Ks2d => {}
        }
        Ok(Self { equation, linear_only })
    }

    pub fn ks1d() -> Self {
        Self { equation: Equation::Ks1d, linear_only: false }
    }

    pub fn ks2d() -> Self {
        Self { equation: Equation::Ks2d, linear_only: false }
    }

    pub fn reg_burgers(order: f64, dim: usize) -> Result<Self> {
        Self::new(Equation::RegBurgers { order, dim }, false)
    }

    pub fn destabilized(eta: f64) -> Result<Self> {
        Self::new(Equation::DestabilizedKs1d { eta }, false)
    }

    pub fn linear(mut self) -> Self {
        self.linear_only = true;
        self
    }

    pub fn dim(&self) -> usize {
        match self.equation {
            Equation::Ks1d | Equation::DestabilizedKs1d { .. } => 1,
            Equation::Ks2d => 2,
            Equation::RegBurgers { dim, .. } => dim,
        }
    }

    pub fn check_grid(&self, grid: &Grid) -> Result<()> {
        if grid.dim() != self.dim() {
            return Err(contract(format!(
                "{} needs a {}-dimensional grid, got d = {}",
                self.equation.name(),
                self.dim(),
                grid.dim()
            )));
        }
        Ok(())
    }

    /// Growth rate `λ` of mode `k` under the linearised flow `e^{λt}`.
    pub fn linear_symbol(&self, k: WaveNumber) -> f64 {
        let xi2 = k.frequency_norm_sq();
        match self.equation {
            Equation::Ks1d | Equation::Ks2d => xi2 - xi2 * xi2,
            Equation::DestabilizedKs1d { eta } => xi2 - xi2 * xi2 + eta,
            Equation::RegBurgers { order, .. } => {
                if xi2 == 0.0 {
                    0.0
                } else {
                    -xi2.powf(order / 2.0)
                }
            }
        }
    }

    /// Dealiased nonlinear term; zero when `linear_only` is set.
    pub fn nonlinear_term(&self, u: &SpectralField) -> Result<SpectralField> {
        self.check_grid(u.grid())?;
        let defect = u.hermitian_defect();
        if defect > HERMITIAN_TOLERANCE {
            return Err(Error::InvalidField(format!(
                "Hermitian symmetry violated (relative defect {defect:.3e})"
            )));
        }
        Ok(self.nonlinear_unchecked(u))
    }

    pub(crate) fn nonlinear_unchecked(&self, u: &SpectralField) -> SpectralField {
        let grid = *u.grid();
        if self.linear_only {
            return SpectralField::zeros(grid);
        }
        let m = dealiased_size(grid.modes());
        match self.equation {
            Equation::Ks1d | Equation::DestabilizedKs1d { .. } => {
                square(u, m).derivative(0).scaled(-0.5)
            }
            Equation::RegBurgers { dim, .. } => {
                let sq = square(u, m);
                let mut div = sq.derivative(0);
                if dim == 2 {
                    div = div.add(&sq.derivative(1));
                }
                div.scaled(-1.0)
            }
            Equation::Ks2d => {
                let px = sample_padded(&u.derivative(0), m);
                let py = sample_padded(&u.derivative(1), m);
                let w: Vec<f64> = px.iter().zip(&py).map(|(a, b)| -0.5 * (a * a + b * b)).collect();
                project_samples(&w, &grid, m)
            }
        }
    }

    /// `λ(k) a_k + N̂_k(a)`.
    pub fn rhs(&self, u: &SpectralField) -> Result<SpectralField> {
        let n = self.nonlinear_term(u)?;
        Ok(u.multiply(|k| self.linear_symbol(k)).add(&n))
    }

    /// Largest transport speed of the nonlinearity, used by the step-size advisory.
    pub fn advection_speed(&self, u: &SpectralField) -> f64 {
        match self.equation {
            Equation::Ks1d | Equation::DestabilizedKs1d { .. } => inverse_unchecked(u).max_abs(),
            Equation::RegBurgers { dim, .. } => 2.0 * (dim as f64).sqrt() * inverse_unchecked(u).max_abs(),
            Equation::Ks2d => {
                let px = inverse_unchecked(&u.derivative(0));
                let py = inverse_unchecked(&u.derivative(1));
                px.samples()
                    .iter()
                    .zip(py.samples())
                    .map(|(a, b)| (a * a + b * b).sqrt())
                    .fold(0.0, f64::max)
            }
        }
    }
}

/// Truncated coefficients of `u²`, exact for band-limited `u`.
fn square(u: &SpectralField, m: usize) -> SpectralField {
    let w: Vec<f64> = sample_padded(u, m).into_iter().map(|x| x * x).collect();
    project_samples(&w, u.grid(), m)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use num_complex::Complex64;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::spectral::{forward_transform, project_band, project_high, triple_product_integral, PhysicalField};
    use crate::testing::random_field;

    fn kpi(k: i64) -> WaveNumber {
        let g = Grid::new(1, PI, 16).unwrap();
        g.wavenumber(g.slot(&[k]).unwrap())
    }

    #[test]
    fn symbols() {
        assert_eq!(ModelSpec::ks1d().linear_symbol(kpi(1)), 0.0);
        assert_eq!(ModelSpec::ks1d().linear_symbol(kpi(2)), -12.0);
        let d = ModelSpec::destabilized(0.1).unwrap();
        assert!((d.linear_symbol(kpi(1)) - 0.1).abs() < 1e-15);
        let b = ModelSpec::reg_burgers(1.5, 1).unwrap();
        assert!((b.linear_symbol(kpi(4)) + 8.0).abs() < 1e-12);
        assert_eq!(b.linear_symbol(kpi(0)), 0.0);
    }

    #[test]
    fn burgers_order_regimes() {
        assert!(ModelSpec::reg_burgers(1.0, 1).is_err());
        assert!(ModelSpec::reg_burgers(2.0, 1).is_ok());
        assert!(ModelSpec::reg_burgers(2.6, 2).is_ok());
        assert!(ModelSpec::reg_burgers(1.5, 3).is_err());
        assert!(ModelSpec::destabilized(-1.0).is_err());
    }

    #[test]
    fn ks1d_sine_nonlinearity() {
        let g = Grid::new(1, PI, 32).unwrap();
        let mut u = SpectralField::zeros(g);
        let amp = (2.0 * PI).sqrt() / 2.0;
        u.set_coefficient(&[1], Complex64::new(0.0, -amp)).unwrap();
        u.set_coefficient(&[-1], Complex64::new(0.0, amp)).unwrap();
        let n = ModelSpec::ks1d().nonlinear_term(&u).unwrap();
        let expected = forward_transform(&PhysicalField::from_fn(g, |x| -0.5 * (2.0 * x[0]).sin()));
        assert!(n.sub(&expected).l2_norm() < 1e-12);
        // λ(1) = 0, so the full right-hand side is the nonlinear term alone.
        let r = ModelSpec::ks1d().rhs(&u).unwrap();
        assert!(r.sub(&expected).l2_norm() < 1e-12);
    }

    #[test]
    fn burgers_constant_has_no_flux() {
        let g = Grid::new(1, 2.0, 16).unwrap();
        let u = forward_transform(&PhysicalField::from_fn(g, |_| 1.7));
        let n = ModelSpec::reg_burgers(2.0, 1).unwrap().nonlinear_term(&u).unwrap();
        assert!(n.l2_norm() < 1e-13);
    }

    #[test]
    fn ks2d_gradient_square() {
        let g = Grid::new(2, PI, 16).unwrap();
        let phi = forward_transform(&PhysicalField::from_fn(g, |x| x[0].cos() + x[1].cos()));
        let n = ModelSpec::ks2d().nonlinear_term(&phi).unwrap();
        let expected = forward_transform(&PhysicalField::from_fn(g, |x| {
            -0.5 + 0.25 * (2.0 * x[0]).cos() + 0.25 * (2.0 * x[1]).cos()
        }));
        assert!(n.sub(&expected).l2_norm() < 1e-12);
        // The mean mode carries -½‖∇φ‖² / (2L)^{d/2}.
        let a0 = n.coefficient(&[0, 0]).unwrap().re;
        assert!((a0 * g.volume().sqrt() + 0.5 * phi.gradient_energy()).abs() < 1e-11);
    }

    #[test]
    fn linear_only_rhs_is_diagonal() {
        let g = Grid::new(1, 5.0, 32).unwrap();
        let u = random_field(g, 10.0, 4);
        let m = ModelSpec::ks1d().linear();
        let r = m.rhs(&u).unwrap();
        let expected = u.multiply(|k| m.linear_symbol(k));
        assert_eq!(r, expected);
        for model in [ModelSpec::ks1d(), ModelSpec::reg_burgers(2.0, 1).unwrap()] {
            assert_eq!(model.rhs(&SpectralField::zeros(g)).unwrap().l2_norm(), 0.0);
        }
        let g2 = Grid::new(2, 5.0, 16).unwrap();
        assert_eq!(ModelSpec::ks2d().rhs(&SpectralField::zeros(g2)).unwrap().l2_norm(), 0.0);
    }

    #[test]
    fn asymmetric_input_rejected() {
        let g = Grid::new(1, 1.0, 16).unwrap();
        let mut u = SpectralField::zeros(g);
        u.set_coefficient(&[2], Complex64::new(1.0, 0.0)).unwrap();
        assert!(matches!(ModelSpec::ks1d().nonlinear_term(&u), Err(Error::InvalidField(_))));
        assert!(ModelSpec::ks2d().nonlinear_term(&u).is_err());
    }

    #[test]
    fn burgers_high_low_regrouping() {
        let g = Grid::new(1, 1.5, 64).unwrap();
        let model = ModelSpec::reg_burgers(2.0, 1).unwrap();
        let m = 8.0;
        for seed in 0..25 {
            let u = random_field(g, 20.0, seed);
            let (hi, lo) = (project_high(&u, m), project_band(&u, -1.0, m).unwrap());
            // ∫ u_{>M} div(u²) from the model's nonlinearity N = -div(u²).
            let direct = -hi.inner(&model.nonlinear_term(&u).unwrap()).re;
            let dlo = lo.derivative(0);
            let regrouped = triple_product_integral(&hi, &hi, &dlo).unwrap()
                + 2.0 * triple_product_integral(&hi, &lo, &dlo).unwrap();
            assert!((direct - regrouped).abs() <= 1e-11 * direct.abs().max(u.energy().powf(1.5)));
            let quarter = project_band(&u, -1.0, m / 2.0 - 0.5).unwrap();
            let z = triple_product_integral(&hi, &quarter, &quarter.derivative(0)).unwrap();
            assert_eq!(z, 0.0);
        }
    }

    proptest! {
        #[test]
        fn ks1d_energy_flux_vanishes(seed in 0u64..10_000, top in 2.0f64..30.0) {
            let g = Grid::new(1, 7.0, 64).unwrap();
            let u = random_field(g, top, seed);
            let flux = u.inner(&ModelSpec::ks1d().nonlinear_term(&u).unwrap()).re;
            prop_assert!(flux.abs() <= 1e-11 * u.l2_norm().powi(3));
        }

        #[test]
        fn ks1d_preserves_oddness_and_mean(seed in 0u64..10_000) {
            let g = Grid::new(1, 4.0, 32).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let b: Vec<f64> = (0..16).map(|_| rng.random_range(-1.0..1.0)).collect();
            let u = SpectralField::from_fn(g, |k| {
                let i = k.index()[0];
                if i == 0 || i.abs() >= 12 { Complex64::new(0.0, 0.0) }
                else { Complex64::new(0.0, i.signum() as f64 * b[i.unsigned_abs() as usize]) }
            });
            let r = ModelSpec::ks1d().rhs(&u).unwrap();
            let tol = 1e-13 * r.coefficients().iter().fold(1.0, |m: f64, a| m.max(a.norm()));
            for flat in 0..g.len() {
                let a = r.coefficients()[flat];
                let mirror = r.coefficients()[g.mirror(flat)];
                prop_assert!(a.re.abs() <= tol);
                prop_assert!((a + mirror).norm() <= tol);
            }
            prop_assert_eq!(r.coefficient(&[0]).unwrap().norm(), 0.0);
        }
    }
}
