//! Fixed-step stiff integration of `â' = λ(k) â + N̂(a)`.
//!
//! ETDRK4 treats the diagonal linear part exactly; its φ-function weights are
//! averaged over a contour around `λ·dt` so that modes with `λ ≈ 0` suffer no
//! cancellation. IMEX Crank-Nicolson is a second-order cross-check.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};
use crate::models::ModelSpec;
use crate::spectral::{Grid, SpectralField};

/// Points on the contour used to evaluate the φ-functions.
pub const CONTOUR_POINTS: usize = 32;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    #[default]
    #[serde(rename = "ETDRK4")]
    Etdrk4,
    #[serde(rename = "IMEX-CN")]
    ImexCn,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Etdrk4 => "ETDRK4",
            Scheme::ImexCn => "IMEX-CN",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_uppercase().as_str() {
            "ETDRK4" => Some(Scheme::Etdrk4),
            "IMEX-CN" | "IMEX_CN" | "IMEXCN" => Some(Scheme::ImexCn),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteppingConfig {
    pub scheme: Scheme,
    pub dt: f64,
    pub t_end: f64,
    pub sample_interval: f64,
    /// `L²` norm above which a run is declared divergent.
    pub max_amplitude: f64,
    pub min_dt: f64,
}

impl SteppingConfig {
    pub fn new(dt: f64, t_end: f64, sample_interval: f64) -> Self {
        Self { scheme: Scheme::Etdrk4, dt, t_end, sample_interval, max_amplitude: 1e6, min_dt: 1e-10 }
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let all_finite = [self.dt, self.t_end, self.sample_interval, self.max_amplitude, self.min_dt]
            .iter()
            .all(|x| x.is_finite());
        if !all_finite {
            return Err(contract("stepping parameters must be finite"));
        }
        if !(self.dt > 0.0) {
            return Err(contract(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.min_dt > 0.0) || self.dt < self.min_dt {
            return Err(contract(format!("dt = {} is below min_dt = {}", self.dt, self.min_dt)));
        }
        if self.dt > self.sample_interval * (1.0 + 1e-12) {
            return Err(contract(format!(
                "dt = {} exceeds sample_interval = {}",
                self.dt, self.sample_interval
            )));
        }
        if self.sample_interval > self.t_end * (1.0 + 1e-12) {
            return Err(contract(format!(
                "sample_interval = {} exceeds t_end = {}",
                self.sample_interval, self.t_end
            )));
        }
        if !(self.max_amplitude > 0.0) {
            return Err(contract("max_amplitude must be positive"));
        }
        Ok(())
    }
}

/// Per-mode ETDRK4 weights for one `(λ, h)` pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhiWeights {
    pub e: f64,
    pub e2: f64,
    pub q: f64,
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
}

impl PhiWeights {
    /// Contour-averaged weights, accurate uniformly in `λh`.
    pub fn contour(lambda: f64, h: f64) -> Self {
        let lh = lambda * h;
        let (mut q, mut f1, mut f2, mut f3) = (0.0, 0.0, 0.0, 0.0);
        for j in 1..=CONTOUR_POINTS {
            let theta = std::f64::consts::PI * (j as f64 - 0.5) / CONTOUR_POINTS as f64;
            let z = Complex64::new(lh, 0.0) + Complex64::from_polar(1.0, theta);
            let ez = z.exp();
            let z3 = z * z * z;
            q += (((z / 2.0).exp() - 1.0) / z).re;
            f1 += ((-4.0 - z + ez * (4.0 - 3.0 * z + z * z)) / z3).re;
            f2 += ((2.0 + z + ez * (z - 2.0)) / z3).re;
            f3 += ((-4.0 - 3.0 * z - z * z + ez * (4.0 - z)) / z3).re;
        }
        // The upper half contour suffices: the lower half contributes conjugates.
        let w = h / CONTOUR_POINTS as f64;
        Self { e: lh.exp(), e2: (lh / 2.0).exp(), q: q * w, f1: f1 * w, f2: f2 * w, f3: f3 * w }
    }

    /// Closed-form weights; loses accuracy as `λh → 0`.
    pub fn direct(lambda: f64, h: f64) -> Self {
        let z = lambda * h;
        let ez = z.exp();
        let z3 = z * z * z;
        Self {
            e: ez,
            e2: (z / 2.0).exp(),
            q: h * ((z / 2.0).exp() - 1.0) / z,
            f1: h * (-4.0 - z + ez * (4.0 - 3.0 * z + z * z)) / z3,
            f2: h * (2.0 + z + ez * (z - 2.0)) / z3,
            f3: h * (-4.0 - 3.0 * z - z * z + ez * (4.0 - z)) / z3,
        }
    }
}

#[derive(Clone, Debug)]
enum Coefficients {
    Etdrk4(Vec<PhiWeights>),
    /// `(1 + hλ/2)/(1 - hλ/2)` and `h/(1 - hλ/2)` per mode.
    ImexCn(Vec<(f64, f64)>),
}

/// Precomputed single-step propagator for a fixed `(model, grid, dt)`.
#[derive(Clone, Debug)]
pub struct Stepper {
    model: ModelSpec,
    grid: Grid,
    scheme: Scheme,
    dt: f64,
    coefficients: Coefficients,
}

/// Builds a stepper for the config's scheme and `dt`.
pub fn make_stepper(model: ModelSpec, grid: Grid, config: &SteppingConfig) -> Result<Stepper> {
    config.validate()?;
    Stepper::new(model, grid, config.scheme, config.dt)
}

impl Stepper {
    pub fn new(model: ModelSpec, grid: Grid, scheme: Scheme, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(contract(format!("dt must be positive, got {dt}")));
        }
        model.check_grid(&grid)?;
        let lambdas = (0..grid.len()).map(|flat| model.linear_symbol(grid.wavenumber(flat)));
        let coefficients = match scheme {
            Scheme::Etdrk4 => Coefficients::Etdrk4(lambdas.map(|l| PhiWeights::contour(l, dt)).collect()),
            Scheme::ImexCn => Coefficients::ImexCn(
                lambdas
                    .map(|l| {
                        let den = 1.0 - 0.5 * dt * l;
                        ((1.0 + 0.5 * dt * l) / den, dt / den)
                    })
                    .collect(),
            ),
        };
        Ok(Self { model, grid, scheme, dt, coefficients })
    }

    pub fn model(&self) -> &ModelSpec {
        &self.model
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Same model and scheme with a different step.
    pub fn rebuild(&self, dt: f64) -> Result<Self> {
        Self::new(self.model, self.grid, self.scheme, dt)
    }

    /// One update of size `dt`, which must equal the stepper's step.
    pub fn step(&self, u: &SpectralField, dt: f64) -> Result<SpectralField> {
        if (dt - self.dt).abs() > 1e-12 * self.dt {
            return Err(contract(format!("stepper built for dt = {}, called with {dt}", self.dt)));
        }
        if u.grid() != &self.grid {
            return Err(contract("field grid differs from the stepper grid"));
        }
        let next = self.advance(u);
        if !next.is_finite() {
            return Err(Error::NonFinite { time: None });
        }
        Ok(next)
    }

    fn advance(&self, u: &SpectralField) -> SpectralField {
        let nl = |v: &SpectralField| self.model.nonlinear_unchecked(v);
        let a = u.coefficients();
        let combine = |f: &dyn Fn(usize) -> Complex64| -> SpectralField {
            SpectralField::from_parts(self.grid, (0..a.len()).map(f).collect())
        };
        match &self.coefficients {
            Coefficients::Etdrk4(w) => {
                let nu = nl(u);
                let nu = nu.coefficients();
                let sa = combine(&|i| w[i].e2 * a[i] + w[i].q * nu[i]);
                let na = nl(&sa);
                let na = na.coefficients();
                let sb = combine(&|i| w[i].e2 * a[i] + w[i].q * na[i]);
                let nb = nl(&sb);
                let nb = nb.coefficients();
                let sa = sa.coefficients();
                let sc = combine(&|i| w[i].e2 * sa[i] + w[i].q * (2.0 * nb[i] - nu[i]));
                let nc = nl(&sc);
                let nc = nc.coefficients();
                combine(&|i| {
                    w[i].e * a[i] + w[i].f1 * nu[i] + 2.0 * w[i].f2 * (na[i] + nb[i]) + w[i].f3 * nc[i]
                })
            }
            Coefficients::ImexCn(w) => {
                let nu = nl(u);
                let nu = nu.coefficients();
                let pred = combine(&|i| w[i].0 * a[i] + w[i].1 * nu[i]);
                let np = nl(&pred);
                let np = np.coefficients();
                combine(&|i| w[i].0 * a[i] + 0.5 * w[i].1 * (nu[i] + np[i]))
            }
        }
    }
}

/// Receives a read-only snapshot at every sample time.
pub trait Observer {
    fn observe(&mut self, t: f64, u: &SpectralField);
}

impl<F: FnMut(f64, &SpectralField)> Observer for F {
    fn observe(&mut self, t: f64, u: &SpectralField) {
        self(t, u)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    Completed,
    /// `‖u‖_{L²}` first exceeded `max_amplitude` at `time`.
    Diverged { time: f64, l2: f64 },
}

#[derive(Clone, Debug)]
pub struct IntegrationReport {
    pub outcome: Outcome,
    pub final_state: SpectralField,
    pub final_time: f64,
    pub steps: u64,
    /// Largest `dt·max|u|/h` seen at a sample.
    pub max_courant: f64,
    /// Set when the advisory `dt ≤ 0.25·h/max|u|` failed at some sample.
    pub cfl_warning: bool,
}

/// Advisory Courant limit; exceeding it is logged, not enforced.
pub const COURANT_ADVISORY: f64 = 0.25;

/// Integrates from `t = 0` to `config.t_end`.
pub fn integrate(
    stepper: &Stepper,
    u0: &SpectralField,
    config: &SteppingConfig,
    observer: &mut impl Observer,
) -> Result<IntegrationReport> {
    integrate_from(stepper, u0, 0.0, config, observer)
}

/// Integrates from `t0` to `config.t_end`, sampling every `sample_interval`
/// after `t0` and at `t_end`.
///
/// Steps within an interval are shortened so that they tile it exactly; the
/// stepper is rebuilt whenever the effective step differs from its own.
pub fn integrate_from(
    stepper: &Stepper,
    u0: &SpectralField,
    t0: f64,
    config: &SteppingConfig,
    observer: &mut impl Observer,
) -> Result<IntegrationReport> {
    config.validate()?;
    if u0.grid() != stepper.grid() {
        return Err(contract("initial field grid differs from the stepper grid"));
    }
    if !(t0.is_finite() && t0 < config.t_end) {
        return Err(contract(format!("start time {t0} must precede t_end = {}", config.t_end)));
    }
    if !u0.is_finite() {
        return Err(Error::NonFinite { time: Some(t0) });
    }
    let si = config.sample_interval;
    let span = config.t_end - t0;
    let intervals = ((span / si) - 1e-9).ceil().max(1.0) as u64;
    let spacing = stepper.grid().spacing();

    let mut cache: Vec<Stepper> = vec![stepper.clone()];
    let mut stepper_for = |h: f64| -> Result<Stepper> {
        if let Some(s) = cache.iter().find(|s| (s.dt() - h).abs() <= 1e-12 * h) {
            return Ok(s.clone());
        }
        let s = stepper.rebuild(h)?;
        cache.push(s.clone());
        Ok(s)
    };

    let mut u = u0.clone();
    let mut steps = 0u64;
    let mut max_courant = 0.0f64;
    let mut courant = |u: &SpectralField, h: f64| {
        let c = h * stepper.model().advection_speed(u) / spacing;
        max_courant = max_courant.max(c);
    };
    courant(&u, config.dt);
    observer.observe(t0, &u);

    for interval in 0..intervals {
        let start = t0 + interval as f64 * si;
        let end = if interval + 1 == intervals { config.t_end } else { start + si };
        let n = ((end - start) / config.dt - 1e-9).ceil().max(1.0) as u64;
        let h = (end - start) / n as f64;
        let st = stepper_for(h)?;
        for j in 1..=n {
            let t = if j == n { end } else { start + j as f64 * h };
            u = st.step(&u, h).map_err(|e| match e {
                Error::NonFinite { .. } => Error::NonFinite { time: Some(t) },
                other => other,
            })?;
            steps += 1;
            let l2 = u.l2_norm();
            if l2 > config.max_amplitude {
                observer.observe(t, &u);
                return Ok(IntegrationReport {
                    outcome: Outcome::Diverged { time: t, l2 },
                    final_state: u,
                    final_time: t,
                    steps,
                    max_courant,
                    cfl_warning: max_courant > COURANT_ADVISORY,
                });
            }
        }
        courant(&u, h);
        observer.observe(end, &u);
    }
    Ok(IntegrationReport {
        outcome: Outcome::Completed,
        final_state: u,
        final_time: config.t_end,
        steps,
        max_courant,
        cfl_warning: max_courant > COURANT_ADVISORY,
    })
}
