//! Dyadic tail energies, Gevrey fits, the `j₀` rules, the tail recursion
//! margin, and the norm-history functionals used for blow-up bookkeeping.

use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};
use crate::models::Equation;
use crate::spectral::SpectralField;

/// Relative noise floor: tail entries below `(floor·‖u‖)²` are roundoff.
pub const DEFAULT_NOISE_FLOOR: f64 = 1e-12;

/// `‖P_{>M} u‖²`, summed over index magnitudes `|k| > M`.
pub fn tail_energy(u: &SpectralField, m: f64) -> f64 {
    let g = u.grid();
    let m_sq = m * m;
    u.coefficients()
        .iter()
        .enumerate()
        .filter(|(flat, _)| g.index_norm_sq(*flat) as f64 > m_sq)
        .map(|(_, a)| a.norm_sqr())
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailEntry {
    pub j: u32,
    /// `M_j = c·2^j·L` in index units.
    pub threshold_index: f64,
    pub energy: f64,
}

/// Tail energies `I_j = ‖P_{>M_j} u‖²` at one time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailProfile {
    pub time: f64,
    pub multiplier: f64,
    /// `‖u‖²`, the scale for the relative noise floor.
    pub total_energy: f64,
    pub entries: Vec<TailEntry>,
}

impl TailProfile {
    /// Absolute floor `(rel·‖u‖)²`.
    pub fn noise_floor(&self, relative: f64) -> f64 {
        relative * relative * self.total_energy
    }

    pub fn energy(&self, j: u32) -> Option<f64> {
        self.entries.iter().find(|e| e.j == j).map(|e| e.energy)
    }
}

/// Profile for `j = 0..=j_max`; thresholds at or beyond the Nyquist index are omitted.
pub fn dyadic_tail_profile(u: &SpectralField, time: f64, multiplier: f64, j_max: u32) -> TailProfile {
    let g = u.grid();
    let nyquist = g.nyquist() as f64;
    let entries = (0..=j_max)
        .map(|j| (j, multiplier * 2f64.powi(j as i32) * g.half_length()))
        .take_while(|&(_, m)| m < nyquist)
        .map(|(j, m)| TailEntry { j, threshold_index: m, energy: tail_energy(u, m) })
        .collect();
    TailProfile { time, multiplier, total_energy: u.energy(), entries }
}

/// `log₂ I_j ≈ a + b·j − c·j²` over the entries above the floor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadraticFit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Root-mean-square misfit in log₂ units.
    pub residual: f64,
    pub j_used: Vec<u32>,
}

fn usable(profile: &TailProfile, noise_floor: f64) -> Vec<(f64, f64)> {
    profile
        .entries
        .iter()
        .filter(|e| e.energy > noise_floor && e.energy > 0.0)
        .map(|e| (e.j as f64, e.energy.log2()))
        .collect()
}

pub fn gevrey_fit(profile: &TailProfile, noise_floor: f64) -> Result<QuadraticFit> {
    let pts = usable(profile, noise_floor);
    if pts.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "Gevrey fit needs 3 tail entries above the floor {noise_floor:.3e}, found {}",
            pts.len()
        )));
    }
    let rows: Vec<Vec<f64>> = pts.iter().map(|&(j, _)| vec![1.0, j, -j * j]).collect();
    let y: Vec<f64> = pts.iter().map(|&(_, v)| v).collect();
    let (beta, residual) = least_squares(&rows, &y)
        .ok_or_else(|| Error::InsufficientData("degenerate Gevrey fit".into()))?;
    Ok(QuadraticFit {
        a: beta[0],
        b: beta[1],
        c: beta[2],
        residual,
        j_used: pts.iter().map(|&(j, _)| j as u32).collect(),
    })
}

/// Second differences of `log₂ I_j` over consecutive entries above the floor.
///
/// A run of usable entries interrupted by a sub-floor entry is not bridged.
pub fn log_tail_second_differences(profile: &TailProfile, noise_floor: f64) -> Vec<f64> {
    let pts = usable(profile, noise_floor);
    pts.windows(3)
        .filter(|w| w[1].0 - w[0].0 == 1.0 && w[2].0 - w[1].0 == 1.0)
        .map(|w| w[2].1 - 2.0 * w[1].1 + w[0].1)
        .collect()
}

/// Least squares `min ‖Xβ − y‖` by normal equations; returns `β` and the RMS misfit.
pub(crate) fn least_squares(rows: &[Vec<f64>], y: &[f64]) -> Option<(Vec<f64>, f64)> {
    let p = rows.first()?.len();
    if rows.len() < p {
        return None;
    }
    let mut a = vec![vec![0.0; p + 1]; p];
    for (row, &yi) in rows.iter().zip(y) {
        for r in 0..p {
            for c in 0..p {
                a[r][c] += row[r] * row[c];
            }
            a[r][p] += row[r] * yi;
        }
    }
    for col in 0..p {
        let pivot = (col..p).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        let pivot_row = a[col].clone();
        for (r, row) in a.iter_mut().enumerate() {
            if r != col {
                let f = row[col] / pivot_row[col];
                for (x, pv) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                    *x -= f * pv;
                }
            }
        }
    }
    let beta: Vec<f64> = (0..p).map(|i| a[i][p] / a[i][i]).collect();
    let sse: f64 = rows
        .iter()
        .zip(y)
        .map(|(row, &yi)| {
            let fit: f64 = row.iter().zip(&beta).map(|(x, b)| x * b).sum();
            (fit - yi).powi(2)
        })
        .sum();
    Some((beta, (sse / rows.len() as f64).sqrt()))
}

fn smallest_integer(mut j: i32, holds: impl Fn(i32) -> bool) -> i32 {
    while holds(j - 1) {
        j -= 1;
    }
    while !holds(j) {
        j += 1;
    }
    j
}

/// Smallest integer `j₀` with `2^{5 j₀} > 100·max(1, C²)·H²`.
pub fn compute_j0(h: f64, c: f64) -> i32 {
    let target = 100.0 * (c * c).max(1.0) * h * h;
    let guess = (target.log2() / 5.0).ceil() as i32;
    smallest_integer(guess, |j| 2f64.powi(5 * j) > target)
}

/// Smallest integer `j₀` with `2^{j₀(3 − 1/p)} ≥ 100·max(1, C²)·K_p`; `p = ∞` gives exponent 3.
pub fn compute_j0_kp(k_p: f64, p: f64, c: f64) -> Result<i32> {
    if !(p > 2.0) {
        return Err(contract(format!("the K_p rule needs p > 2, got {p}")));
    }
    if !(k_p > 0.0 && k_p.is_finite()) {
        return Err(contract(format!("K_p must be positive and finite, got {k_p}")));
    }
    let exponent = if p.is_infinite() { 3.0 } else { 3.0 - 1.0 / p };
    let target = 100.0 * (c * c).max(1.0) * k_p;
    let guess = (target.log2() / exponent).ceil() as i32;
    Ok(smallest_integer(guess, |j| (j as f64 * exponent).exp2() >= target))
}

/// Empirical constant in `I_j' + 2^{4j} I_j ≤ C·2^{−j} H² I_{j−1}` for one `j`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecursionMargin {
    pub j: u32,
    /// `sup_t ĉ_j(t)`, clamped below at 0.
    pub sup_constant: f64,
    /// Interior samples with `I_{j−1} > 0`.
    pub samples_used: usize,
}

/// `ĉ_j(t) = (İ_j + 2^{4j} I_j)·2^j / (H² I_{j−1})` for every `j > j0`, with
/// centered time differences; endpoints and samples with `I_{j−1} = 0` are skipped.
pub fn tail_recursion_margin(history: &[TailProfile], h: f64, j0: i32) -> Result<Vec<RecursionMargin>> {
    if history.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "tail recursion margin needs 3 profiles, got {}",
            history.len()
        )));
    }
    if !(h > 0.0) {
        return Err(contract(format!("H must be positive, got {h}")));
    }
    let shared = history.iter().map(|p| p.entries.len()).min().unwrap_or(0);
    let first = (j0 + 1).max(1) as u32;
    let mut margins = Vec::new();
    for j in first..shared as u32 {
        let mut sup = 0.0f64;
        let mut used = 0;
        for w in history.windows(3) {
            let (prev, mid, next) = (&w[0], &w[1], &w[2]);
            let (Some(lo), Some(ij)) = (mid.energy(j - 1), mid.energy(j)) else { continue };
            let (Some(before), Some(after)) = (prev.energy(j), next.energy(j)) else { continue };
            if lo == 0.0 {
                continue;
            }
            let dot = (after - before) / (next.time - prev.time);
            let scale = 2f64.powi(j as i32);
            let value = (dot + scale.powi(4) * ij) * scale / (h * h * lo);
            sup = sup.max(value);
            used += 1;
        }
        margins.push(RecursionMargin { j, sup_constant: sup, samples_used: used });
    }
    Ok(margins)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormSample {
    pub t: f64,
    pub l2: f64,
    /// `‖u‖_{L^p}` for each configured `p`, in order.
    pub lp: Vec<f64>,
    /// `‖u‖_{H^s}` for each configured `s`, in order.
    pub hs: Vec<f64>,
    /// `∫(−φ) dx`.
    pub mean_minus_phi: f64,
    /// `‖∇φ‖²` at `t`.
    pub grad_sq: f64,
    /// `∫₀ᵗ ‖∇φ‖² ds` by the trapezoid rule over samples.
    pub grad_sq_integral: f64,
}

/// Sampled norms of one run, tagged with the equation that produced them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormHistory {
    pub equation: Equation,
    pub p_values: Vec<f64>,
    pub s_values: Vec<f64>,
    pub samples: Vec<NormSample>,
}

impl NormHistory {
    pub fn new(equation: Equation, p_values: Vec<f64>, s_values: Vec<f64>) -> Self {
        Self { equation, p_values, s_values, samples: Vec::new() }
    }

    /// Appends a sample; times must increase strictly.
    pub fn push(&mut self, sample: NormSample) -> Result<()> {
        if sample.lp.len() != self.p_values.len() || sample.hs.len() != self.s_values.len() {
            return Err(contract("norm sample does not match the configured p and s lists"));
        }
        if let Some(last) = self.samples.last() {
            if !(sample.t > last.t) {
                return Err(contract(format!("sample time {} does not follow {}", sample.t, last.t)));
            }
        }
        self.samples.push(sample);
        Ok(())
    }

    /// Running supremum of `‖u‖_{L²}`; the finite-horizon surrogate for `H`.
    pub fn sup_l2(&self) -> f64 {
        self.samples.iter().map(|s| s.l2).fold(0.0, f64::max)
    }

    /// Samples with `t ≥ t_first + (t_last − t_first)/2`.
    pub fn second_half(&self) -> &[NormSample] {
        let (Some(first), Some(last)) = (self.samples.first(), self.samples.last()) else {
            return &[];
        };
        let mid = first.t + 0.5 * (last.t - first.t);
        let start = self.samples.partition_point(|s| s.t < mid);
        &self.samples[start..]
    }

    pub fn second_half_sup(&self, value: impl Fn(&NormSample) -> f64) -> f64 {
        self.second_half().iter().map(value).fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowupCaps {
    pub l2_cap: f64,
    /// Final `‖φ‖` above this multiple of its second-half starting value reads as growing.
    pub growth_factor: f64,
}

impl Default for BlowupCaps {
    fn default() -> Self {
        Self { l2_cap: 1e6, growth_factor: 100.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BlowupKind {
    Bounded,
    Growing,
    /// `time` is the log-linear interpolated crossing of the cap.
    Diverged { time: f64 },
}

/// Verdict plus the two functionals whose finiteness rules out blow-up.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowupVerdict {
    pub verdict: BlowupKind,
    pub sup_l2: f64,
    pub grad_sq_integral: f64,
}

pub fn blowup_monitor(history: &NormHistory, caps: &BlowupCaps) -> Result<BlowupVerdict> {
    let samples = &history.samples;
    let last = samples.last().ok_or_else(|| contract("blow-up monitor needs a nonempty history"))?;
    let functionals = |verdict| BlowupVerdict {
        verdict,
        sup_l2: history.sup_l2(),
        grad_sq_integral: last.grad_sq_integral,
    };
    if let Some(i) = samples.iter().position(|s| !(s.l2 <= caps.l2_cap)) {
        let time = if i == 0 {
            samples[0].t
        } else {
            let (a, b) = (&samples[i - 1], &samples[i]);
            if b.l2.is_finite() && a.l2 > 0.0 {
                let frac = (caps.l2_cap.ln() - a.l2.ln()) / (b.l2.ln() - a.l2.ln());
                a.t + frac * (b.t - a.t)
            } else {
                b.t
            }
        };
        return Ok(functionals(BlowupKind::Diverged { time }));
    }
    let start = history.second_half().first().map_or(0.0, |s| s.l2);
    let growing = if start > 0.0 { last.l2 > caps.growth_factor * start } else { last.l2 > 0.0 && samples.len() > 1 };
    Ok(functionals(if growing { BlowupKind::Growing } else { BlowupKind::Bounded }))
}

/// `max_i |Ṁ(t_i) − ½‖∇φ(t_i)‖²|` with `M = ∫(−φ)` and centered differences.
pub fn mean_drift_residual(history: &NormHistory) -> Result<f64> {
    if history.equation != Equation::Ks2d {
        return Err(contract(format!(
            "mean-drift identity applies to KS2D, history is {}",
            history.equation.name()
        )));
    }
    if history.samples.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "mean-drift residual needs 3 samples, got {}",
            history.samples.len()
        )));
    }
    Ok(history
        .samples
        .windows(3)
        .map(|w| {
            let rate = (w[2].mean_minus_phi - w[0].mean_minus_phi) / (w[2].t - w[0].t);
            (rate - 0.5 * w[1].grad_sq).abs()
        })
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use num_complex::Complex64;
    use proptest::prelude::*;

    use super::*;
    use crate::spectral::{project_low, Grid};
    use crate::testing::random_field;

    fn profile(values: &[f64]) -> TailProfile {
        TailProfile {
            time: 0.0,
            multiplier: 1.0,
            total_energy: values.first().copied().unwrap_or(0.0),
            entries: values
                .iter()
                .enumerate()
                .map(|(j, &energy)| TailEntry { j: j as u32, threshold_index: 2f64.powi(j as i32), energy })
                .collect(),
        }
    }

    #[test]
    fn tail_energy_is_strict() {
        let g = Grid::new(1, 3.0, 32).unwrap();
        let mut u = SpectralField::zeros(g);
        u.set_coefficient(&[5], Complex64::new(1.0, 0.5)).unwrap();
        u.set_coefficient(&[-5], Complex64::new(1.0, -0.5)).unwrap();
        assert_eq!(tail_energy(&u, 4.0), u.energy());
        assert_eq!(tail_energy(&u, 5.0), 0.0);
    }

    #[test]
    fn geometric_spectrum_profile() {
        let l = 2.0;
        let g = Grid::new(1, l, 256).unwrap();
        let u = SpectralField::from_fn(g, |k| {
            let i = k.index()[0];
            if g.slot(&[-i]).is_none() {
                return Complex64::new(0.0, 0.0);
            }
            Complex64::new(2f64.powf(-(i.abs() as f64) / l).sqrt(), 0.0)
        });
        let p = dyadic_tail_profile(&u, 0.0, 1.0, 10);
        // M_j = 2^{j+1}; the Nyquist index 128 cuts the profile after j = 5.
        assert_eq!(p.entries.len(), 6);
        let r = 2f64.powf(-1.0 / l);
        for e in &p.entries {
            let m = e.threshold_index as i32;
            // 2 Σ_{k=m+1}^{127} r^k
            let exact = 2.0 * (r.powi(m + 1) - r.powi(128)) / (1.0 - r);
            assert!((e.energy - exact).abs() <= 1e-10 * exact, "j = {}", e.j);
        }
    }

    #[test]
    fn band_limited_field_has_empty_tails() {
        let g = Grid::new(2, 1.5, 32).unwrap();
        let u = project_low(&random_field(g, 10.0, 2), 1.5);
        let p = dyadic_tail_profile(&u, 0.0, 1.0, 3);
        assert!(p.entries.iter().skip(1).all(|e| e.energy == 0.0));
    }

    #[test]
    fn exact_quadratic_recovered() {
        let values: Vec<f64> = (0..6).map(|j| 2f64.powi(4 - 3 * j * j)).collect();
        let fit = gevrey_fit(&profile(&values), 0.0).unwrap();
        assert!((fit.a - 4.0).abs() < 1e-9 && fit.b.abs() < 1e-9 && (fit.c - 3.0).abs() < 1e-9);
        assert!(fit.residual < 1e-9);
        assert_eq!(fit.j_used, vec![0, 1, 2, 3, 4, 5]);
        let values: Vec<f64> = (0..8).map(|j| 2f64.powi(-j)).collect();
        assert!(gevrey_fit(&profile(&values), 0.0).unwrap().c.abs() < 1e-9);
    }

    #[test]
    fn floor_filters_fit_points() {
        let values = [1.0, 0.1, 1e-30, 0.0];
        assert!(matches!(gevrey_fit(&profile(&values), 1e-20), Err(Error::InsufficientData(_))));
        assert_eq!(gevrey_fit(&profile(&values), 0.0).unwrap().j_used, vec![0, 1, 2]);
        let concave: Vec<f64> = (0..6).map(|j| 2f64.powi(-j * j)).collect();
        let d = log_tail_second_differences(&profile(&concave), 0.0);
        assert_eq!(d.len(), 4);
        assert!(d.iter().all(|&x| (x + 2.0).abs() < 1e-12));
    }

    #[test]
    fn j0_examples() {
        assert_eq!(compute_j0(1.0, 1.0), 2);
        assert_eq!(compute_j0(10.0, 1.0), 3);
        assert_eq!(compute_j0(0.01, 1.0), -1);
        assert_eq!(compute_j0(1e-4, 0.5), -3);
        assert_eq!(compute_j0_kp(1.0, 4.0, 1.0).unwrap(), 3);
        assert_eq!(compute_j0_kp(1.0, f64::INFINITY, 1.0).unwrap(), 3);
        assert!(compute_j0_kp(1.0, 2.0, 1.0).is_err());
        assert!(compute_j0_kp(1.0, 1.5, 1.0).is_err());
    }

    #[test]
    fn j0_boundary_is_strict() {
        // 100·H² = 2^10 exactly: 2^{5·2} is not strictly larger.
        assert_eq!(compute_j0(3.2, 1.0), 3);
        // 100·K_p = 2^6 with exponent 3: equality is admitted.
        assert_eq!(compute_j0_kp(0.64, f64::INFINITY, 1.0).unwrap(), 2);
    }

    proptest! {
        #[test]
        fn j0_is_monotone(h in 1e-3f64..1e4, dh in 0.0f64..1e3, c in 0.1f64..10.0, p in 2.01f64..50.0) {
            prop_assert!(compute_j0(h + dh, c) >= compute_j0(h, c));
            prop_assert!(compute_j0_kp(h + dh, p, c).unwrap() >= compute_j0_kp(h, p, c).unwrap());
        }

        #[test]
        fn profiles_are_nested(seed in 0u64..1000, top in 2.0f64..60.0) {
            let g = Grid::new(1, 4.0, 128).unwrap();
            let u = random_field(g, top, seed);
            let p = dyadic_tail_profile(&u, 0.0, 0.5, 8);
            prop_assert!(p.entries.windows(2).all(|w| w[1].energy <= w[0].energy));
            prop_assert!(p.entries.iter().all(|e| e.energy <= p.total_energy));
            let m = 7.5;
            let split = tail_energy(&u, m) + project_low(&u, m).energy();
            prop_assert!((split - u.energy()).abs() <= 1e-12 * u.energy());
        }
    }

    fn synthetic_history(times: &[f64], level: impl Fn(u32, f64) -> f64, js: u32) -> Vec<TailProfile> {
        times
            .iter()
            .map(|&t| TailProfile {
                time: t,
                multiplier: 1.0,
                total_energy: 1.0,
                entries: (0..js)
                    .map(|j| TailEntry { j, threshold_index: 2f64.powi(j as i32), energy: level(j, t) })
                    .collect(),
            })
            .collect()
    }

    #[test]
    fn pure_absorption_gives_zero_margin() {
        let times: Vec<f64> = (0..200).map(|i| i as f64 * 1e-4).collect();
        let hist = synthetic_history(&times, |j, t| 2f64.powi(-(j as i32)) * (-(16f64.powi(j as i32)) * t).exp(), 3);
        let margins = tail_recursion_margin(&hist, 1.0, 0).unwrap();
        assert_eq!(margins.len(), 2);
        for m in margins {
            // Centered differences of e^{-16^j t} overshoot the decay rate slightly.
            assert!(m.sup_constant <= 1e-3 * 16f64.powi(m.j as i32), "{m:?}");
        }
    }

    #[test]
    fn planted_constant_recovered() {
        let (k, h, lo) = (2.5, 3.0, 0.7);
        let rate = 16.0;
        // I_1 solves I' + 16 I = K·2^{-1}H²·I_0 with I_0 held fixed.
        let forcing = k * 0.5 * h * h * lo;
        let times: Vec<f64> = (0..400).map(|i| i as f64 * 5e-4).collect();
        let hist = synthetic_history(
            &times,
            |j, t| if j == 0 { lo } else { forcing / rate * (1.0 - (-rate * t).exp()) },
            2,
        );
        let margins = tail_recursion_margin(&hist, h, 0).unwrap();
        assert_eq!(margins.len(), 1);
        assert!((margins[0].sup_constant - k).abs() <= 0.05 * k);
        assert_eq!(margins[0].samples_used, 398);
        assert!(tail_recursion_margin(&hist[..2], h, 0).is_err());
    }

    fn sample(t: f64, l2: f64, mean_minus_phi: f64, grad_sq: f64, grad_sq_integral: f64) -> NormSample {
        NormSample { t, l2, lp: vec![], hs: vec![], mean_minus_phi, grad_sq, grad_sq_integral }
    }

    #[test]
    fn zero_history_is_bounded() {
        let mut h = NormHistory::new(Equation::Ks2d, vec![], vec![]);
        for i in 0..10 {
            h.push(sample(i as f64, 0.0, 0.0, 0.0, 0.0)).unwrap();
        }
        let v = blowup_monitor(&h, &BlowupCaps::default()).unwrap();
        assert_eq!(v.verdict, BlowupKind::Bounded);
        assert_eq!((v.sup_l2, v.grad_sq_integral), (0.0, 0.0));
        assert_eq!(mean_drift_residual(&h).unwrap(), 0.0);
        assert!(h.push(sample(9.0, 0.0, 0.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn exponential_history_diverges_at_crossing() {
        let mut h = NormHistory::new(Equation::Ks2d, vec![], vec![]);
        for i in 0..=100 {
            let t = i as f64 * 0.1;
            h.push(sample(t, 10f64.powf(t), 0.0, 0.0, 0.0)).unwrap();
        }
        match blowup_monitor(&h, &BlowupCaps::default()).unwrap().verdict {
            BlowupKind::Diverged { time } => assert!((time - 6.0).abs() < 1e-9),
            other => panic!("{other:?}"),
        }
        let caps = BlowupCaps { l2_cap: 1e20, growth_factor: 100.0 };
        assert_eq!(blowup_monitor(&h, &caps).unwrap().verdict, BlowupKind::Growing);
    }

    #[test]
    fn mean_drift_matches_centered_difference_error() {
        // M' = ½G exactly, with G = G0·e^{2λt}; centered differences inflate M' by sinh(x)/x, x = 2λΔ.
        let (g0, lambda) = (3.0, 0.4);
        let run = |dt: f64| {
            let mut h = NormHistory::new(Equation::Ks2d, vec![], vec![]);
            for i in 0..=(2.0 / dt).round() as usize {
                let t = i as f64 * dt;
                let g = g0 * (2.0 * lambda * t).exp();
                h.push(sample(t, 1.0, g0 / (4.0 * lambda) * ((2.0 * lambda * t).exp() - 1.0), g, 0.0)).unwrap();
            }
            mean_drift_residual(&h).unwrap()
        };
        for dt in [0.1, 0.05, 0.025] {
            let x = 2.0 * lambda * dt;
            let t_max = 2.0 - dt;
            let expected = 0.5 * g0 * (2.0 * lambda * t_max).exp() * (x.sinh() / x - 1.0);
            assert!((run(dt) - expected).abs() <= 1e-9 * expected);
        }
        // The worst sample moves from t = 1.95 to 1.975, hence not exactly 4.
        let ratio = run(0.05) / run(0.025);
        assert!((ratio - 4.0).abs() < 0.15);
        let h = NormHistory::new(Equation::Ks1d, vec![], vec![]);
        assert!(matches!(mean_drift_residual(&h), Err(Error::Contract(_))));
    }

    #[test]
    fn least_squares_line() {
        let rows: Vec<Vec<f64>> = (0..5).map(|i| vec![1.0, i as f64]).collect();
        let y: Vec<f64> = (0..5).map(|i| 2.0 - 0.5 * i as f64).collect();
        let (b, r) = least_squares(&rows, &y).unwrap();
        assert!((b[0] - 2.0).abs() < 1e-12 && (b[1] + 0.5).abs() < 1e-12 && r < 1e-12);
        assert!(least_squares(&rows[..1], &y[..1]).is_none());
    }
}
