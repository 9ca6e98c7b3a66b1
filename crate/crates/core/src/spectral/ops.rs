use num_complex::Complex64;

use super::field::{PhysicalField, SpectralField};
use super::transform::sample_padded;
use crate::error::{contract, Result};

/// Keeps exactly the modes with `lo < |k| ≤ hi` (Euclidean index magnitude).
///
/// `P_{≤N}` is `project_band(u, -1.0, N)` and `P_{>M}` is
/// `project_band(u, M, f64::INFINITY)`.
pub fn project_band(u: &SpectralField, lo: f64, hi: f64) -> Result<SpectralField> {
    if lo.is_nan() || hi.is_nan() || lo >= hi {
        return Err(contract(format!("band requires lo < hi, got ({lo}, {hi}]")));
    }
    let g = *u.grid();
    let coeffs = u
        .coefficients()
        .iter()
        .enumerate()
        .map(|(flat, &a)| {
            let k = g.wavenumber(flat).magnitude();
            if lo < k && k <= hi {
                a
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    SpectralField::new(g, coeffs)
}

/// `P_{≤n} u`, including the mean.
pub fn project_low(u: &SpectralField, n: f64) -> SpectralField {
    project_band(u, -1.0, n.max(-0.5)).expect("valid band")
}

/// `P_{>m} u`.
pub fn project_high(u: &SpectralField, m: f64) -> SpectralField {
    project_band(u, m, f64::INFINITY).expect("valid band")
}

/// `A_s = (-Δ)^{s/2}`: multiplies `a_k` by `|ξ_k|^s`.
pub fn apply_fractional_laplacian(u: &SpectralField, s: f64) -> Result<SpectralField> {
    if s.is_nan() || s < 0.0 {
        return Err(contract(format!("fractional order must be >= 0, got {s}")));
    }
    if s == 0.0 {
        return Ok(u.clone());
    }
    Ok(u.multiply(|k| if k.is_zero() { 0.0 } else { k.frequency_norm().powf(s) }))
}

/// `|ξ|^{2s}` with the convention `0^0 = 1`.
fn weight(xi_sq: f64, s: f64) -> f64 {
    if s == 0.0 {
        1.0
    } else if xi_sq == 0.0 {
        0.0
    } else {
        xi_sq.powf(s)
    }
}

/// `(Σ_k |a_k|² (1 + |ξ_k|^{2s}))^{1/2}`.
pub fn sobolev_norm(u: &SpectralField, s: f64) -> f64 {
    let g = u.grid();
    u.coefficients()
        .iter()
        .enumerate()
        .map(|(flat, a)| a.norm_sqr() * (1.0 + weight(g.wavenumber(flat).frequency_norm_sq(), s)))
        .sum::<f64>()
        .sqrt()
}

/// `(Σ_k |a_k|² |ξ_k|^{2s})^{1/2}`.
pub fn homogeneous_sobolev_norm(u: &SpectralField, s: f64) -> f64 {
    let g = u.grid();
    u.coefficients()
        .iter()
        .enumerate()
        .map(|(flat, a)| a.norm_sqr() * weight(g.wavenumber(flat).frequency_norm_sq(), s))
        .sum::<f64>()
        .sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SobolevKind {
    Inhomogeneous,
    Homogeneous,
}

/// Dyadic block containing index magnitude `|k|`: block 0 is `|k| ≤ 1`,
/// block `j ≥ 1` is `2^{j-1} < |k| ≤ 2^j`.
pub fn dyadic_block(k_norm_sq: i64) -> usize {
    if k_norm_sq <= 1 {
        return 0;
    }
    let mut j = 1;
    while ((1i64 << j) * (1i64 << j)) < k_norm_sq {
        j += 1;
    }
    j
}

/// Per-block contributions to the squared Sobolev norm, indexed by [`dyadic_block`].
pub fn dyadic_sobolev_blocks(u: &SpectralField, s: f64, kind: SobolevKind) -> Vec<f64> {
    let g = u.grid();
    let mut blocks: Vec<f64> = Vec::new();
    for (flat, a) in u.coefficients().iter().enumerate() {
        let j = dyadic_block(g.index_norm_sq(flat));
        if blocks.len() <= j {
            blocks.resize(j + 1, 0.0);
        }
        let w = weight(g.wavenumber(flat).frequency_norm_sq(), s);
        let w = match kind {
            SobolevKind::Inhomogeneous => 1.0 + w,
            SobolevKind::Homogeneous => w,
        };
        blocks[j] += a.norm_sqr() * w;
    }
    blocks
}

/// Sobolev norm evaluated block by block over dyadic annuli.
pub fn dyadic_sobolev_norm(u: &SpectralField, s: f64, kind: SobolevKind) -> f64 {
    dyadic_sobolev_blocks(u, s, kind).iter().sum::<f64>().sqrt()
}

/// Uniform-grid quadrature of `(∫|f|^p)^{1/p}`; `p = ∞` gives the sample max.
pub fn lp_norm(f: &PhysicalField, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(contract(format!("L^p exponent must be >= 1, got {p}")));
    }
    if p.is_infinite() {
        return Ok(f.max_abs());
    }
    let g = f.grid();
    let w = g.spacing().powi(g.dim() as i32);
    let scale = f.max_abs();
    if scale == 0.0 {
        return Ok(0.0);
    }
    // Scale by the max to keep |f|^p in range for large p.
    let sum: f64 = f.samples().iter().map(|x| (x.abs() / scale).powf(p)).sum();
    Ok(scale * (w * sum).powf(1.0 / p))
}

/// `∫ f g h dx` evaluated exactly in coefficient space,
/// `(2L)^{-d/2} Σ_{k+m+n=0} f_k g_m h_n`.
///
/// Cost is `O(nnz(f) · nnz(g))`.
pub fn triple_product_integral(f: &SpectralField, g: &SpectralField, h: &SpectralField) -> Result<f64> {
    let grid = f.grid();
    if grid != g.grid() || grid != h.grid() {
        return Err(contract("triple product requires identical grids"));
    }
    let nonzero = |u: &SpectralField| -> Vec<([i64; 2], Complex64)> {
        u.coefficients()
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm_sqr() != 0.0)
            .map(|(flat, &a)| {
                let k = grid.wavenumber(flat);
                let idx = k.index();
                ([idx[0], idx.get(1).copied().unwrap_or(0)], a)
            })
            .collect()
    };
    let fs = nonzero(f);
    let gs = nonzero(g);
    let dim = grid.dim();
    let hc = h.coefficients();
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, fk) in &fs {
        for (m, gm) in &gs {
            let n = [-(k[0] + m[0]), -(k[1] + m[1])];
            if let Some(slot) = grid.slot(&n[..dim]) {
                acc += fk * gm * hc[slot];
            }
        }
    }
    Ok(acc.re * grid.volume().powf(-0.5))
}

/// `∫ f g h dx` by quadrature on a grid with twice the modes, which is exact
/// for three band-limited factors without Nyquist content.
pub fn triple_product_quadrature(f: &SpectralField, g: &SpectralField, h: &SpectralField) -> Result<f64> {
    let grid = f.grid();
    if grid != g.grid() || grid != h.grid() {
        return Err(contract("triple product requires identical grids"));
    }
    let m = 2 * grid.modes();
    let (fs, gs, hs) = (sample_padded(f, m), sample_padded(g, m), sample_padded(h, m));
    let w = (2.0 * grid.half_length() / m as f64).powi(grid.dim() as i32);
    Ok(w * fs.iter().zip(&gs).zip(&hs).map(|((a, b), c)| a * b * c).sum::<f64>())
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use proptest::prelude::*;

    use super::*;
    use crate::spectral::{forward_transform, Grid};
    use crate::testing::random_field;

    fn cos_mode(grid: Grid, k: i64) -> SpectralField {
        let mut u = SpectralField::zeros(grid);
        let amp = Complex64::new(grid.volume().sqrt() / 2.0, 0.0);
        u.set_coefficient(&[k], amp).unwrap();
        u.set_coefficient(&[-k], amp).unwrap();
        u
    }

    #[test]
    fn band_selection() {
        let g = Grid::new(1, PI, 32).unwrap();
        let u = cos_mode(g, 1).add(&cos_mode(g, 3)).add(&cos_mode(g, 7));
        let p = project_band(&u, 2.0, 5.0).unwrap();
        assert_eq!(p, cos_mode(g, 3));
        let high = project_high(&cos_mode(g, 5), 5.0);
        assert!(high.coefficients().iter().all(|a| a.norm() == 0.0));
        assert!(project_band(&u, 3.0, 3.0).is_err());
        assert!(project_band(&u, 4.0, 3.0).is_err());
    }

    #[test]
    fn dyadic_partition_is_exact() {
        for (dim, n) in [(1, 256), (2, 32)] {
            let g = Grid::new(dim, 3.3, n).unwrap();
            let u = random_field(g, n as f64, 11);
            let n0 = 3.0;
            let mut sum = project_low(&u, n0);
            let mut lo = n0;
            while lo < n as f64 {
                sum = sum.add(&project_band(&u, lo, 2.0 * lo).unwrap());
                lo *= 2.0;
            }
            assert_eq!(sum, u);
        }
    }

    #[test]
    fn fractional_laplacian_multiplier() {
        let g = Grid::new(1, PI, 16).unwrap();
        let mut u = SpectralField::zeros(g);
        u.set_coefficient(&[2], Complex64::new(1.0, 0.0)).unwrap();
        let v = apply_fractional_laplacian(&u, 1.6).unwrap();
        let m = v.coefficient(&[2]).unwrap().re;
        assert!((m - 3.031433133020796).abs() < 1e-12, "{m}");
        assert!(apply_fractional_laplacian(&u, -0.1).is_err());
    }

    #[test]
    fn fractional_laplacian_mean_mode() {
        let g = Grid::new(1, 1.0, 8).unwrap();
        let mut u = SpectralField::zeros(g);
        u.set_coefficient(&[0], Complex64::new(2.0, 0.0)).unwrap();
        assert_eq!(apply_fractional_laplacian(&u, 0.0).unwrap(), u);
        assert_eq!(apply_fractional_laplacian(&u, 0.5).unwrap().coefficient(&[0]).unwrap().norm(), 0.0);
    }

    #[test]
    fn sobolev_single_mode() {
        let g = Grid::new(1, PI, 16).unwrap();
        let mut u = SpectralField::zeros(g);
        let a = Complex64::new(0.5f64.sqrt(), 0.0);
        u.set_coefficient(&[1], a).unwrap();
        u.set_coefficient(&[-1], a).unwrap();
        assert!((homogeneous_sobolev_norm(&u, 2.0) - 1.0).abs() < 1e-15);
        assert!((homogeneous_sobolev_norm(&u, 0.0) - u.l2_norm()).abs() < 1e-15);
    }

    #[test]
    fn lp_norm_examples() {
        let g = Grid::new(1, PI, 16).unwrap();
        let c = -1.5;
        let f = PhysicalField::from_fn(g, |_| c);
        assert!((lp_norm(&f, 4.0).unwrap() - c.abs() * (2.0 * PI).powf(0.25)).abs() < 1e-13);
        let l = 2.7;
        let g = Grid::new(1, l, 16).unwrap();
        let f = PhysicalField::from_fn(g, |x| (PI * x[0] / l).sin());
        assert!((lp_norm(&f, 2.0).unwrap() - l.sqrt()).abs() < 1e-13);
        let g = Grid::new(1, 1.0, 8).unwrap();
        let f = PhysicalField::new(g, vec![-3.0, 2.0, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(lp_norm(&f, f64::INFINITY).unwrap(), 3.0);
        assert!(lp_norm(&f, 0.5).is_err());
    }

    #[test]
    fn triple_products() {
        let g = Grid::new(1, PI, 32).unwrap();
        let (c3, c2, c1, c6) = (cos_mode(g, 3), cos_mode(g, 2), cos_mode(g, 1), cos_mode(g, 6));
        let v = triple_product_integral(&c3, &c2, &c1).unwrap();
        assert!((v - PI / 2.0).abs() < 1e-13, "{v}");
        assert!((triple_product_quadrature(&c3, &c2, &c1).unwrap() - PI / 2.0).abs() < 1e-13);
        assert_eq!(triple_product_integral(&c3, &c2, &c6).unwrap(), 0.0);
        let other = Grid::new(1, PI, 16).unwrap();
        assert!(triple_product_integral(&c3, &c2, &SpectralField::zeros(other)).is_err());
    }

    /// O(N³) brute-force triple sum over all index triples; test oracle.
    #[test]
    fn triple_product_matches_brute_force() {
        let g = Grid::new(1, 1.7, 16).unwrap();
        let (f, gg, h) = (random_field(g, 7.0, 1), random_field(g, 7.0, 2), random_field(g, 7.0, 3));
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..16 {
            for j in 0..16 {
                for l in 0..16 {
                    let (k, m, n) = (g.wavenumber(i), g.wavenumber(j), g.wavenumber(l));
                    if k.index()[0] + m.index()[0] + n.index()[0] == 0 {
                        acc += f.coefficients()[i] * gg.coefficients()[j] * h.coefficients()[l];
                    }
                }
            }
        }
        let brute = acc.re / g.volume().sqrt();
        let fast = triple_product_integral(&f, &gg, &h).unwrap();
        let quad = triple_product_quadrature(&f, &gg, &h).unwrap();
        assert!((brute - fast).abs() < 1e-12 * brute.abs().max(1.0));
        assert!((brute - quad).abs() < 1e-12 * brute.abs().max(1.0));
    }

    #[test]
    fn high_low_corollary() {
        // f supported on |k| > N0, g on |k| < N0/2: h may be replaced by P_{>N0/2} h.
        let g = Grid::new(1, 2.0, 64).unwrap();
        let n0 = 12.0;
        for seed in 0..20 {
            let f = project_high(&random_field(g, 31.0, seed), n0);
            let low = random_field(g, 31.0, seed + 100);
            let gg = project_band(&low, -1.0, n0 / 2.0 - 0.5).unwrap();
            let h = random_field(g, 31.0, seed + 200);
            let a = triple_product_integral(&f, &gg, &h).unwrap();
            let b = triple_product_integral(&f, &gg, &project_high(&h, n0 / 2.0)).unwrap();
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn plancherel_on_quadrature() {
        let g = Grid::new(2, 1.1, 16).unwrap();
        let f = PhysicalField::from_fn(g, |x| (3.0 * x[0]).sin() * x[1].cos() + 0.1 * x[0] * x[1]);
        let u = forward_transform(&f);
        let quad = lp_norm(&f, 2.0).unwrap();
        assert!((quad - u.l2_norm()).abs() <= 1e-12 * quad);
    }

    proptest! {
        #[test]
        fn fractional_semigroup(seed in 0u64..1000, dim in 1usize..=2) {
            let g = Grid::new(dim, 1.9, 16).unwrap();
            let u = random_field(g, 8.0, seed);
            let twice = apply_fractional_laplacian(&apply_fractional_laplacian(&u, 1.0).unwrap(), 1.0).unwrap();
            let direct = apply_fractional_laplacian(&u, 2.0).unwrap();
            let err = twice.sub(&direct).l2_norm();
            prop_assert!(err <= 1e-12 * direct.l2_norm());
        }

        #[test]
        fn projections_compose(seed in 0u64..1000, a in 0.0f64..6.0, w1 in 0.5f64..5.0, b in 0.0f64..6.0, w2 in 0.5f64..5.0) {
            let g = Grid::new(2, 1.0, 16).unwrap();
            let u = random_field(g, 12.0, seed);
            let p1 = project_band(&u, a, a + w1).unwrap();
            prop_assert_eq!(&project_band(&p1, a, a + w1).unwrap(), &p1);
            let lo = a.max(b);
            let hi = (a + w1).min(b + w2);
            let both = project_band(&project_band(&u, b, b + w2).unwrap(), a, a + w1).unwrap();
            if lo < hi {
                prop_assert_eq!(both, project_band(&u, lo, hi).unwrap());
            } else {
                prop_assert!(both.coefficients().iter().all(|z| z.norm() == 0.0));
            }
        }

        #[test]
        fn dyadic_regrouping(seed in 0u64..1000, s in 0.0f64..3.0, dim in 1usize..=2) {
            let g = Grid::new(dim, 2.3, 32).unwrap();
            let u = random_field(g, 15.0, seed);
            for kind in [SobolevKind::Inhomogeneous, SobolevKind::Homogeneous] {
                let direct = match kind {
                    SobolevKind::Inhomogeneous => sobolev_norm(&u, s),
                    SobolevKind::Homogeneous => homogeneous_sobolev_norm(&u, s),
                };
                let grouped = dyadic_sobolev_norm(&u, s, kind);
                prop_assert!((direct - grouped).abs() <= 1e-12 * direct);
            }
        }

        #[test]
        fn tail_lower_bound(seed in 0u64..1000, m in 1.0f64..10.0, s in 0.0f64..3.0) {
            let g = Grid::new(1, 3.0, 32).unwrap();
            let tail = project_high(&random_field(g, 15.0, seed), m);
            let lhs = apply_fractional_laplacian(&tail, s).unwrap().l2_norm();
            let rhs = (PI * m / 3.0).powf(s) * tail.l2_norm();
            prop_assert!(lhs >= rhs * (1.0 - 1e-14));
        }
    }
}
