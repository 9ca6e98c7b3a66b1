use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::checkpoint::load_checkpoint;
use super::config::{ExperimentConfig, InitialData};
use crate::error::{Error, Result};
use crate::spectral::{Grid, SpectralField};

/// Seeded band-limited real field with `0 < |k| ≤ top_index`, scaled to the given RMS.
///
/// Draws follow ascending index order over `[-top, top]^d`, so a seed yields
/// the same field on every grid that retains the band.
pub fn random_band(grid: Grid, seed: u64, top_index: usize, rms: f64, odd: bool) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = SpectralField::zeros(grid);
    let top = top_index.min(grid.nyquist() - 1) as i64;
    let top_sq = top * top;
    let mut draw = |k: &[i64], u: &mut SpectralField| {
        let norm_sq: i64 = k.iter().map(|x| x * x).sum();
        let re: f64 = rng.random_range(-1.0..1.0);
        let im: f64 = rng.random_range(-1.0..1.0);
        if norm_sq == 0 || norm_sq > top_sq {
            return;
        }
        let value = if odd { Complex64::new(0.0, im) } else { Complex64::new(re, im) };
        let _ = u.set_coefficient(k, value);
    };
    if grid.dim() == 1 {
        for k in -top..=top {
            draw(&[k], &mut u);
        }
    } else {
        for k1 in -top..=top {
            for k2 in -top..=top {
                draw(&[k1, k2], &mut u);
            }
        }
    }
    let c = u.coefficients().to_vec();
    let sym = SpectralField::new(grid, (0..c.len()).map(|i| 0.5 * (c[i] + c[grid.mirror(i)].conj())).collect())
        .expect("same grid");
    let current = (sym.energy() / grid.volume()).sqrt();
    if current == 0.0 {
        sym
    } else {
        sym.scaled(rms / current)
    }
}

/// `amplitude·cos(π k·x / L)`; `k = 0` gives the constant `amplitude`.
pub fn single_mode(grid: Grid, k: &[i64], amplitude: f64) -> Result<SpectralField> {
    let mut u = SpectralField::zeros(grid);
    let root = grid.volume().sqrt();
    let minus: Vec<i64> = k.iter().map(|x| -x).collect();
    if k.iter().all(|&x| x == 0) {
        u.set_coefficient(k, Complex64::new(amplitude * root, 0.0))?;
    } else {
        u.set_coefficient(k, Complex64::new(amplitude * root / 2.0, 0.0))?;
        u.set_coefficient(&minus, Complex64::new(amplitude * root / 2.0, 0.0))?;
    }
    Ok(u)
}

/// Initial field and start time described by the config.
pub fn initial_field(cfg: &ExperimentConfig) -> Result<(SpectralField, f64)> {
    let grid = cfg.grid;
    match &cfg.initial_data {
        InitialData::RandomBand { seed, top_index, amplitude } => {
            Ok((random_band(grid, *seed, cfg.resolved_top_index(*top_index), *amplitude, false), 0.0))
        }
        InitialData::OddRandom { seed, top_index, amplitude } => {
            Ok((random_band(grid, *seed, cfg.resolved_top_index(*top_index), *amplitude, true), 0.0))
        }
        InitialData::SingleMode { k, amplitude } => Ok((single_mode(grid, k, *amplitude)?, 0.0)),
        InitialData::FromCheckpoint { path } => {
            let (u, t) = load_checkpoint(path)?;
            if u.grid() != &grid {
                return Err(Error::Config(format!(
                    "checkpoint grid (d = {}, N = {}, L = {}) differs from the configured grid",
                    u.grid().dim(),
                    u.grid().modes(),
                    u.grid().half_length()
                )));
            }
            Ok((u, t))
        }
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::spectral::inverse_transform;

    #[test]
    fn seeded_and_resolution_independent() {
        let g = Grid::new(1, 4.0, 32).unwrap();
        let a = random_band(g, 7, 4, 0.3, false);
        assert_eq!(a, random_band(g, 7, 4, 0.3, false));
        assert_ne!(a, random_band(g, 8, 4, 0.3, false));
        let fine = random_band(g.with_modes(64).unwrap(), 7, 4, 0.3, false);
        for k in -4..=4 {
            assert_eq!(a.coefficient(&[k]), fine.coefficient(&[k]));
        }
        let rms = (a.energy() / g.volume()).sqrt();
        assert!((rms - 0.3).abs() < 1e-14);
        assert!(a.hermitian_defect() == 0.0);
        assert_eq!(a.coefficient(&[0]).unwrap().norm(), 0.0);
        assert_eq!(a.coefficient(&[5]).unwrap().norm(), 0.0);
    }

    #[test]
    fn odd_data_is_odd() {
        let g = Grid::new(1, 5.0, 32).unwrap();
        let u = random_band(g, 1, 5, 1.0, true);
        let f = inverse_transform(&u).unwrap();
        let n = g.modes();
        // x_j = -L + jh, so x_{N-j} = -x_j for 0 < j < N.
        for j in 1..n {
            assert!((f.samples()[j] + f.samples()[n - j]).abs() < 1e-13);
        }
    }

    #[test]
    fn cosine_mode() {
        let g = Grid::new(2, PI, 16).unwrap();
        let u = single_mode(g, &[1, 2], 0.5).unwrap();
        let f = inverse_transform(&u).unwrap();
        for (j, &v) in f.samples().iter().enumerate() {
            let x = g.point(j);
            assert!((v - 0.5 * (x[0] + 2.0 * x[1]).cos()).abs() < 1e-13);
        }
        let c = single_mode(g, &[0, 0], 2.0).unwrap();
        assert!(inverse_transform(&c).unwrap().samples().iter().all(|v| (v - 2.0).abs() < 1e-13));
    }
}
