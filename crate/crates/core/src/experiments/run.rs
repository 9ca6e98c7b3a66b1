use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::checkpoint::save_checkpoint;
use super::config::ExperimentConfig;
use super::initial::initial_field;
use super::output::{read_norms_csv, read_tails_csv, write_json, write_norms_csv, write_tails_csv};
use crate::diagnostics::{
    blowup_monitor, compute_j0, compute_j0_kp, gevrey_fit, log_tail_second_differences, mean_drift_residual,
    tail_recursion_margin, BlowupCaps, BlowupVerdict, NormHistory, NormSample, QuadraticFit, RecursionMargin,
    TailEntry, TailProfile,
};
use crate::error::{Error, Result};
use crate::integrator::{integrate_from, make_stepper, Observer, Outcome};
use crate::models::Equation;
use crate::spectral::{inverse_unchecked, lp_norm, sobolev_norm, Grid, SpectralField};

/// Groups storage slots by `|k|²` so that any threshold can be applied after the run.
#[derive(Clone, Debug)]
struct Shells {
    slot_shell: Vec<usize>,
    norms_sq: Vec<i64>,
}

impl Shells {
    fn new(grid: &Grid) -> Self {
        let per_slot: Vec<i64> = (0..grid.len()).map(|s| grid.index_norm_sq(s)).collect();
        let mut norms_sq = per_slot.clone();
        norms_sq.sort_unstable();
        norms_sq.dedup();
        let slot_shell = per_slot.iter().map(|n| norms_sq.binary_search(n).expect("present")).collect();
        Self { slot_shell, norms_sq }
    }

    /// Tail sums `Σ_{shell ≥ i} E`, accumulated from the highest shell down.
    fn suffix_energies(&self, u: &SpectralField) -> Vec<f64> {
        let mut e = vec![0.0; self.norms_sq.len()];
        for (a, &shell) in u.coefficients().iter().zip(&self.slot_shell) {
            e[shell] += a.norm_sqr();
        }
        let mut acc = 0.0;
        let mut suffix = vec![0.0; e.len() + 1];
        for i in (0..e.len()).rev() {
            acc += e[i];
            suffix[i] = acc;
        }
        suffix
    }

    fn tail(&self, suffix: &[f64], m: f64) -> f64 {
        let first = self.norms_sq.partition_point(|&n| n as f64 <= m * m);
        suffix[first]
    }
}

struct Recorder<'a> {
    cfg: &'a ExperimentConfig,
    shells: Shells,
    history: NormHistory,
    suffixes: Vec<Vec<f64>>,
    error: Option<Error>,
}

impl Recorder<'_> {
    fn sample(&self, t: f64, u: &SpectralField) -> Result<NormSample> {
        let dg = &self.cfg.diagnostics;
        let physical = inverse_unchecked(u);
        let lp = dg.p_values.iter().map(|&p| lp_norm(&physical, p)).collect::<Result<Vec<_>>>()?;
        let hs = dg.s_values.iter().map(|&s| sobolev_norm(u, s)).collect();
        let grad_sq = u.gradient_energy();
        let grad_sq_integral = match self.history.samples.last() {
            Some(prev) => prev.grad_sq_integral + 0.5 * (t - prev.t) * (prev.grad_sq + grad_sq),
            None => 0.0,
        };
        Ok(NormSample { t, l2: u.l2_norm(), lp, hs, mean_minus_phi: -u.integral(), grad_sq, grad_sq_integral })
    }
}

impl Observer for Recorder<'_> {
    fn observe(&mut self, t: f64, u: &SpectralField) {
        if self.error.is_some() {
            return;
        }
        match self.sample(t, u).and_then(|s| self.history.push(s)) {
            Ok(()) => self.suffixes.push(self.shells.suffix_energies(u)),
            Err(e) => self.error = Some(e),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GevreyRecord {
    pub time: f64,
    pub noise_floor: f64,
    pub fit: Option<QuadraticFit>,
    /// Why no fit was possible, when `fit` is absent.
    pub error: Option<String>,
    pub second_differences: Vec<f64>,
    /// All second differences negative (and at least one present).
    pub concave: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct J0Kp {
    pub p: String,
    pub k_p: f64,
    pub j0: i32,
}

/// Everything `fits.json` holds; a pure function of the config and the two CSV files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fits {
    pub model: String,
    pub t_start: f64,
    pub t_end: f64,
    pub samples: usize,
    /// Sup of `‖u‖_{L²}` over the whole history; the surrogate for `H`.
    pub h_full: f64,
    pub h_second_half: f64,
    pub tail_multiplier: f64,
    pub relative_noise_floor: f64,
    pub gevrey: Vec<GevreyRecord>,
    pub j0: i32,
    pub j0_kp: Vec<J0Kp>,
    /// Margins for `j > j0`, over second-half profiles.
    pub recursion_margins: Vec<RecursionMargin>,
    /// Margins for every `j ≥ 1`, over second-half profiles.
    pub recursion_margins_all: Vec<RecursionMargin>,
    pub verdict: Option<BlowupVerdict>,
    pub mean_drift_residual: Option<f64>,
}

pub fn gevrey_record(profile: &TailProfile, relative_floor: f64) -> GevreyRecord {
    let floor = profile.noise_floor(relative_floor);
    let second_differences = log_tail_second_differences(profile, floor);
    let concave = !second_differences.is_empty() && second_differences.iter().all(|&d| d < 0.0);
    let (fit, error) = match gevrey_fit(profile, floor) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    GevreyRecord { time: profile.time, noise_floor: floor, fit, error, second_differences, concave }
}

/// Profiles from the second half of the horizon.
pub fn second_half_profiles(tails: &[TailProfile]) -> &[TailProfile] {
    let (Some(first), Some(last)) = (tails.first(), tails.last()) else { return &[] };
    let mid = first.time + 0.5 * (last.time - first.time);
    &tails[tails.partition_point(|p| p.time < mid)..]
}

pub fn compute_fits(cfg: &ExperimentConfig, norms: &NormHistory, tails: &[TailProfile]) -> Fits {
    let dg = &cfg.diagnostics;
    let h_full = norms.sup_l2();
    let t_start = norms.samples.first().map_or(0.0, |s| s.t);
    let t_end = norms.samples.last().map_or(0.0, |s| s.t);

    let targets = [t_start + 1.0, t_start + 2.5, t_start + 0.5 * (t_end - t_start), t_end];
    let mut picked: Vec<usize> = targets
        .iter()
        .filter_map(|&target| tails.iter().position(|p| p.time >= target - 1e-9))
        .collect();
    picked.dedup();
    let gevrey = picked.into_iter().map(|i| gevrey_record(&tails[i], dg.noise_floor)).collect();

    let j0 = if h_full > 0.0 { compute_j0(h_full, dg.constant) } else { 0 };
    let j0_kp = dg
        .p_values
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 2.0)
        .filter_map(|(i, &p)| {
            let k_p = norms.samples.iter().map(|s| s.lp[i]).fold(0.0, f64::max);
            let j0 = compute_j0_kp(k_p, p, dg.constant).ok()?;
            Some(J0Kp { p: super::output::label(p), k_p, j0 })
        })
        .collect();

    let late = second_half_profiles(tails);
    let margins = |j0: i32| {
        if h_full > 0.0 {
            tail_recursion_margin(late, h_full, j0).unwrap_or_default()
        } else {
            Vec::new()
        }
    };
    let caps = BlowupCaps { l2_cap: cfg.stepping.max_amplitude, ..BlowupCaps::default() };
    Fits {
        model: cfg.model.equation.name().to_string(),
        t_start,
        t_end,
        samples: norms.samples.len(),
        h_full,
        h_second_half: norms.second_half_sup(|s| s.l2),
        tail_multiplier: dg.multiplier.resolve(h_full),
        relative_noise_floor: dg.noise_floor,
        gevrey,
        j0,
        j0_kp,
        recursion_margins: margins(j0),
        recursion_margins_all: margins(0),
        verdict: blowup_monitor(norms, &caps).ok(),
        mean_drift_residual: if cfg.model.equation == Equation::Ks2d {
            mean_drift_residual(norms).ok()
        } else {
            None
        },
    }
}

#[derive(Clone, Debug)]
pub struct RunRecord {
    pub config: ExperimentConfig,
    pub norms: NormHistory,
    pub tails: Vec<TailProfile>,
    pub outcome: Outcome,
    pub fits: Fits,
    pub final_state: SpectralField,
    pub final_time: f64,
    pub steps: u64,
    pub max_courant: f64,
    pub wall_clock_seconds: f64,
    pub warnings: Vec<String>,
}

/// Contents of `run.json`: the parts of a record that are not pure functions of the CSVs.
#[derive(Clone, Debug, Serialize)]
pub struct RunSummary<'a> {
    pub outcome: &'a Outcome,
    pub verdict: &'a Option<BlowupVerdict>,
    pub final_time: f64,
    pub steps: u64,
    pub max_courant: f64,
    pub wall_clock_seconds: f64,
    pub warnings: &'a [String],
}

/// Integrates the configured run and evaluates every diagnostic. Writes nothing.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunRecord> {
    let started = Instant::now();
    let (u0, t0) = initial_field(cfg)?;
    if !(t0 < cfg.stepping.t_end) {
        return Err(Error::Config(format!("start time {t0} is not before stepping.t_end = {}", cfg.stepping.t_end)));
    }
    let stepper = make_stepper(cfg.model, cfg.grid, &cfg.stepping)?;
    let mut recorder = Recorder {
        cfg,
        shells: Shells::new(&cfg.grid),
        history: NormHistory::new(cfg.model.equation, cfg.diagnostics.p_values.clone(), cfg.diagnostics.s_values.clone()),
        suffixes: Vec::new(),
        error: None,
    };
    let report = integrate_from(&stepper, &u0, t0, &cfg.stepping, &mut recorder)?;
    if let Some(e) = recorder.error {
        return Err(e);
    }
    let Recorder { shells, history, suffixes, .. } = recorder;

    let multiplier = cfg.diagnostics.multiplier.resolve(history.sup_l2());
    let tails = tail_profiles(&shells, &history, &suffixes, &cfg.grid, multiplier, cfg.diagnostics.j_max);
    let fits = compute_fits(cfg, &history, &tails);

    let mut warnings = Vec::new();
    if report.cfl_warning {
        warnings.push(format!(
            "dt exceeds the advisory 0.25*h/max|u| (largest Courant number {:.3})",
            report.max_courant
        ));
    }
    Ok(RunRecord {
        config: cfg.clone(),
        norms: history,
        tails,
        outcome: report.outcome,
        fits,
        final_state: report.final_state,
        final_time: report.final_time,
        steps: report.steps,
        max_courant: report.max_courant,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        warnings,
    })
}

fn tail_profiles(
    shells: &Shells,
    history: &NormHistory,
    suffixes: &[Vec<f64>],
    grid: &Grid,
    multiplier: f64,
    j_max: u32,
) -> Vec<TailProfile> {
    let nyquist = grid.nyquist() as f64;
    let thresholds: Vec<(u32, f64)> = (0..=j_max)
        .map(|j| (j, multiplier * 2f64.powi(j as i32) * grid.half_length()))
        .take_while(|&(_, m)| m < nyquist)
        .collect();
    history
        .samples
        .iter()
        .zip(suffixes)
        .map(|(s, suffix)| TailProfile {
            time: s.t,
            multiplier,
            total_energy: s.l2 * s.l2,
            entries: thresholds
                .iter()
                .map(|&(j, m)| TailEntry { j, threshold_index: m, energy: shells.tail(suffix, m) })
                .collect(),
        })
        .collect()
}

/// Writes `config.toml`, `norms.csv`, `tails.csv`, `fits.json`, `run.json` and `final.ckpt`.
pub fn emit_outputs(record: &RunRecord, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut echo = record.config.clone();
    echo.output = dir.to_path_buf();
    std::fs::write(dir.join("config.toml"), echo.to_toml())?;
    write_norms_csv(&record.norms, &dir.join("norms.csv"))?;
    write_tails_csv(&record.tails, &dir.join("tails.csv"))?;
    write_json(&record.fits, &dir.join("fits.json"))?;
    let summary = RunSummary {
        outcome: &record.outcome,
        verdict: &record.fits.verdict,
        final_time: record.final_time,
        steps: record.steps,
        max_courant: record.max_courant,
        wall_clock_seconds: record.wall_clock_seconds,
        warnings: &record.warnings,
    };
    write_json(&summary, &dir.join("run.json"))?;
    save_checkpoint(&record.final_state, record.final_time, &dir.join("final.ckpt"))
}

/// Recomputes `fits.json` for a run directory from its CSV files.
pub fn analyze_dir(dir: &Path, overrides: &[String]) -> Result<Fits> {
    let config_path = dir.join("config.toml");
    if !config_path.is_file() {
        return Err(Error::Config(format!("{} is not a run directory (no config.toml)", dir.display())));
    }
    let cfg = ExperimentConfig::load(Some(&config_path), overrides)?;
    let norms = read_norms_csv(&dir.join("norms.csv"), cfg.model.equation)?;
    let multiplier = cfg.diagnostics.multiplier.resolve(norms.sup_l2());
    let tails = read_tails_csv(&dir.join("tails.csv"), multiplier, &norms)?;
    let fits = compute_fits(&cfg, &norms, &tails);
    write_json(&fits, &dir.join("fits.json"))?;
    Ok(fits)
}

/// Refined-versus-base comparison of the time-averaged second-half `L²` norm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolutionCheck {
    pub base_mean_l2: f64,
    pub refined_mean_l2: f64,
    pub relative_change: f64,
    pub under_resolved: bool,
}

/// Relative change above which a run is flagged under-resolved.
pub const RESOLUTION_TOLERANCE: f64 = 0.02;

pub fn second_half_mean_l2(history: &NormHistory) -> f64 {
    let late = history.second_half();
    late.iter().map(|s| s.l2).sum::<f64>() / late.len().max(1) as f64
}

/// Reruns with `2N` modes and `dt/2` from the same initial data.
pub fn resolution_check(cfg: &ExperimentConfig, base: &RunRecord) -> Result<ResolutionCheck> {
    let mut refined = cfg.clone();
    refined.grid = cfg.grid.with_modes(2 * cfg.grid.modes())?;
    refined.stepping.dt /= 2.0;
    let fine = run_experiment(&refined)?;
    let (a, b) = (second_half_mean_l2(&base.norms), second_half_mean_l2(&fine.norms));
    let relative_change = (b - a).abs() / a.abs().max(f64::MIN_POSITIVE);
    Ok(ResolutionCheck {
        base_mean_l2: a,
        refined_mean_l2: b,
        relative_change,
        under_resolved: relative_change >= RESOLUTION_TOLERANCE,
    })
}
