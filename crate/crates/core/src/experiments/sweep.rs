use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Observable};
use super::run::{emit_outputs, run_experiment, RunRecord};
use crate::diagnostics::{least_squares, NormHistory};
use crate::error::{Error, Result};
use crate::integrator::Outcome;
use crate::par::Execution;
use crate::spectral::Grid;

/// Least-squares fit of `log observable = intercept + slope · log L`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub observable: String,
    /// `(L, observable)` in sweep order.
    pub pairs: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    /// RMS residual in log units.
    pub residual: f64,
}

pub fn fit_power_law(observable: &str, pairs: &[(f64, f64)]) -> Result<ScalingFit> {
    if pairs.len() < 3 {
        return Err(Error::InsufficientData(format!("a scaling fit needs 3 values of L, got {}", pairs.len())));
    }
    if let Some(&(l, v)) = pairs.iter().find(|&&(l, v)| !(l > 0.0 && v > 0.0 && v.is_finite())) {
        return Err(Error::InsufficientData(format!("cannot take logarithms of L = {l}, value = {v}")));
    }
    let rows: Vec<Vec<f64>> = pairs.iter().map(|&(l, _)| vec![1.0, l.ln()]).collect();
    let y: Vec<f64> = pairs.iter().map(|&(_, v)| v.ln()).collect();
    let (beta, residual) = least_squares(&rows, &y)
        .ok_or_else(|| Error::InsufficientData("values of L are not distinct".into()))?;
    Ok(ScalingFit { observable: observable.to_string(), pairs: pairs.to_vec(), slope: beta[1], intercept: beta[0], residual })
}

/// Second-half supremum of the observable.
pub fn observable_value(obs: Observable, norms: &NormHistory) -> Result<f64> {
    let position = |list: &[f64], x: f64| list.iter().position(|&v| v == x);
    match obs {
        Observable::SupL2 => Ok(norms.second_half_sup(|s| s.l2)),
        Observable::SupHs(s) => {
            let i = position(&norms.s_values, s).ok_or_else(|| Error::Config(format!("s = {s} was not recorded")))?;
            Ok(norms.second_half_sup(|x| x.hs[i]))
        }
        Observable::SupLp(p) => {
            let i = position(&norms.p_values, p).ok_or_else(|| Error::Config(format!("p = {p} was not recorded")))?;
            Ok(norms.second_half_sup(|x| x.lp[i]))
        }
    }
}

/// Config for one sweep member: `N` scales with `L` (rounded to even, at least 8)
/// and the observable's exponent is added to the recorded norms.
pub fn member_config(base: &ExperimentConfig, half_length: f64) -> Result<ExperimentConfig> {
    let mut cfg = base.clone();
    let ratio = half_length / base.grid.half_length();
    let modes = ((base.grid.modes() as f64 * ratio / 2.0).round() as usize * 2).max(8);
    cfg.grid = Grid::new(base.grid.dim(), half_length, modes)?;
    match base.sweep.observable {
        Observable::SupL2 => {}
        Observable::SupHs(s) if !cfg.diagnostics.s_values.contains(&s) => cfg.diagnostics.s_values.push(s),
        Observable::SupLp(p) if !cfg.diagnostics.p_values.contains(&p) => cfg.diagnostics.p_values.push(p),
        _ => {}
    }
    cfg.output = base.output.join(format!("L_{}", super::output::label(half_length)));
    Ok(cfg)
}

#[derive(Clone, Debug)]
pub struct SweepReport {
    pub fit: ScalingFit,
    pub members: Vec<RunRecord>,
}

pub fn sweep_scaling(base: &ExperimentConfig, write: bool) -> Result<SweepReport> {
    sweep_scaling_with(base, write, Execution::default())
}

/// Runs every `L` in `sweep.L_values`; any divergent member aborts the sweep.
pub fn sweep_scaling_with(base: &ExperimentConfig, write: bool, exec: Execution) -> Result<SweepReport> {
    let configs = base
        .sweep
        .l_values
        .iter()
        .map(|&l| member_config(base, l))
        .collect::<Result<Vec<_>>>()?;
    if configs.len() < 3 {
        return Err(Error::Config(format!("sweep.L_values needs at least 3 entries, got {}", configs.len())));
    }
    let results = exec.map(&configs, |cfg| -> Result<RunRecord> {
        let record = run_experiment(cfg)?;
        if write {
            emit_outputs(&record, &cfg.output)?;
        }
        Ok(record)
    });
    let members = results.into_iter().collect::<Result<Vec<_>>>()?;
    let mut pairs = Vec::with_capacity(members.len());
    for m in &members {
        let half_length = m.config.grid.half_length();
        if let Outcome::Diverged { time, .. } = m.outcome {
            return Err(Error::SweepDivergence { half_length, time });
        }
        pairs.push((half_length, observable_value(base.sweep.observable, &m.norms)?));
    }
    let fit = fit_power_law(&base.sweep.observable.name(), &pairs)?;
    Ok(SweepReport { fit, members })
}

/// Directory a sweep's summary is written to.
pub fn sweep_output(base: &ExperimentConfig) -> PathBuf {
    base.output.join("sweep.json")
}
