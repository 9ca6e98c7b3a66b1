use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};

/// Periodic box `[-L, L]^d` sampled with `N` points per axis.
///
/// Retained wave-number indices are `k_i ∈ [-N/2, N/2)`. Coefficients are
/// stored in FFT order: slot `i` on an axis holds index `i` for `i < N/2`
/// and `i - N` otherwise, row-major over axes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    half_length: f64,
    modes: usize,
}

impl Grid {
    pub fn new(dim: usize, half_length: f64, modes: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(contract(format!("dimension must be 1 or 2, got {dim}")));
        }
        if !(half_length.is_finite() && half_length > 0.0) {
            return Err(contract(format!("half-length must be positive, got {half_length}")));
        }
        if modes < 8 || !modes.is_multiple_of(2) {
            return Err(contract(format!("modes per axis must be even and >= 8, got {modes}")));
        }
        Ok(Self { dim, half_length, modes })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Half the period `L`.
    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    /// Modes (and sample points) per axis `N`.
    pub fn modes(&self) -> usize {
        self.modes
    }

    /// Total number of coefficients, `N^d`.
    pub fn len(&self) -> usize {
        self.modes.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_length / self.modes as f64
    }

    /// Measure of the box, `(2L)^d`.
    pub fn volume(&self) -> f64 {
        (2.0 * self.half_length).powi(self.dim as i32)
    }

    /// Largest retained index magnitude along one axis.
    pub fn nyquist(&self) -> usize {
        self.modes / 2
    }

    /// Physical frequency per unit index, `π / L`.
    pub fn frequency_scale(&self) -> f64 {
        PI / self.half_length
    }

    /// Same box with a different number of modes per axis.
    pub fn with_modes(&self, modes: usize) -> Result<Self> {
        Self::new(self.dim, self.half_length, modes)
    }

    pub fn wavenumber(&self, flat: usize) -> WaveNumber {
        let n = self.modes;
        let index = if self.dim == 1 {
            [axis_index(flat, n), 0]
        } else {
            [axis_index(flat / n, n), axis_index(flat % n, n)]
        };
        WaveNumber { index, dim: self.dim, scale: self.frequency_scale() }
    }

    /// Squared index magnitude `|k|²` of a storage slot.
    pub fn index_norm_sq(&self, flat: usize) -> i64 {
        let k = self.wavenumber(flat).index;
        k[0] * k[0] + k[1] * k[1]
    }

    /// Storage slot of a retained index vector.
    pub fn slot(&self, k: &[i64]) -> Option<usize> {
        if k.len() != self.dim {
            return None;
        }
        let half = self.nyquist() as i64;
        if k.iter().any(|&ki| ki < -half || ki >= half) {
            return None;
        }
        let n = self.modes as i64;
        Some(k.iter().fold(0usize, |acc, &ki| acc * self.modes + ki.rem_euclid(n) as usize))
    }

    /// Slot holding `-k` (indices taken modulo `N`, so the Nyquist index maps to itself).
    pub fn mirror(&self, flat: usize) -> usize {
        let n = self.modes;
        if self.dim == 1 {
            (n - flat) % n
        } else {
            let (i, j) = (flat / n, flat % n);
            ((n - i) % n) * n + (n - j) % n
        }
    }

    /// True when some component of the slot's index equals `-N/2`.
    pub fn is_nyquist(&self, flat: usize) -> bool {
        let half = -(self.nyquist() as i64);
        let k = self.wavenumber(flat).index;
        k[..self.dim].contains(&half)
    }

    /// Physical coordinates of sample `flat`; the first point sits at `-L`.
    pub fn point(&self, flat: usize) -> [f64; 2] {
        let h = self.spacing();
        let l = self.half_length;
        if self.dim == 1 {
            [-l + flat as f64 * h, 0.0]
        } else {
            let n = self.modes;
            [-l + (flat / n) as f64 * h, -l + (flat % n) as f64 * h]
        }
    }
}

/// Wave-number index of one Fourier mode together with its physical frequency.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WaveNumber {
    index: [i64; 2],
    dim: usize,
    scale: f64,
}

impl WaveNumber {
    pub fn index(&self) -> &[i64] {
        &self.index[..self.dim]
    }

    /// Euclidean index magnitude `|k|`.
    pub fn magnitude(&self) -> f64 {
        ((self.index[0] * self.index[0] + self.index[1] * self.index[1]) as f64).sqrt()
    }

    /// Physical frequency vector `ξ_k = π k / L`.
    pub fn frequency(&self) -> [f64; 2] {
        [self.scale * self.index[0] as f64, self.scale * self.index[1] as f64]
    }

    /// `|ξ_k| = π |k| / L`.
    pub fn frequency_norm(&self) -> f64 {
        self.scale * self.magnitude()
    }

    pub fn frequency_norm_sq(&self) -> f64 {
        let f = self.frequency();
        f[0] * f[0] + f[1] * f[1]
    }

    pub fn is_zero(&self) -> bool {
        self.index == [0, 0]
    }
}

/// Signed index stored in slot `i` of an axis with `m` slots.
pub(crate) fn axis_index(i: usize, m: usize) -> i64 {
    if i < m.div_ceil(2) {
        i as i64
    } else {
        i as i64 - m as i64
    }
}
