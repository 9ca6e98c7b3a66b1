//! Experiment configuration: a TOML file whose dotted keys mirror the
//! configuration fields, plus `key=value` overrides in the same syntax.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use toml::Value;

use crate::error::{Error, Result};
use crate::integrator::{Scheme, SteppingConfig};
use crate::models::{Equation, ModelSpec};
use crate::spectral::Grid;

/// How a key falls back when absent from the file.
#[derive(Clone, Copy, Debug)]
pub enum DefaultValue {
    /// A TOML literal, parsed exactly like a user-supplied value.
    Literal(&'static str),
    /// Computed from other keys; the text describes the rule.
    Derived(&'static str),
    /// Needed only in some configurations.
    Conditional(&'static str),
}

#[derive(Clone, Copy, Debug)]
pub struct KeySpec {
    pub key: &'static str,
    pub default: DefaultValue,
    pub help: &'static str,
}

use DefaultValue::{Conditional, Derived, Literal};

/// Every accepted key. Parsing falls back to these literals, and `--help` prints them.
pub const KEYS: &[KeySpec] = &[
    KeySpec { key: "model.variant", default: Literal("\"KS1D\""), help: "KS1D, KS2D, RegBurgers or DestabilizedKS1D" },
    KeySpec { key: "model.s", default: Literal("2.0"), help: "RegBurgers dissipation order, (1,2] or > 1 + d/2" },
    KeySpec { key: "model.eta", default: Literal("0.0"), help: "DestabilizedKS1D growth rate, >= 0" },
    KeySpec { key: "model.d", default: Derived("1, or 2 for KS2D"), help: "spatial dimension (RegBurgers: 1 or 2)" },
    KeySpec { key: "model.linear_only", default: Literal("false"), help: "drop the nonlinear term" },
    KeySpec { key: "grid.d", default: Derived("model.d"), help: "alias of model.d; must agree when both are set" },
    KeySpec { key: "grid.L", default: Literal("\"16pi\""), help: "half period L; a number or a multiple of pi such as \"25pi\"" },
    KeySpec { key: "grid.N", default: Literal("256"), help: "modes per axis, even and >= 8" },
    KeySpec { key: "stepping.scheme", default: Literal("\"ETDRK4\""), help: "ETDRK4 or IMEX-CN" },
    KeySpec { key: "stepping.dt", default: Literal("0.01"), help: "time step" },
    KeySpec { key: "stepping.t_end", default: Literal("100.0"), help: "final time" },
    KeySpec { key: "stepping.sample_interval", default: Literal("0.5"), help: "time between recorded samples" },
    KeySpec { key: "stepping.max_amplitude", default: Literal("1e6"), help: "L2 norm declaring divergence" },
    KeySpec { key: "stepping.min_dt", default: Literal("1e-10"), help: "smallest admissible dt" },
    KeySpec { key: "initial_data.kind", default: Literal("\"random_band\""), help: "random_band, single_mode, odd_random or from_checkpoint" },
    KeySpec { key: "initial_data.seed", default: Literal("0"), help: "generator seed (random_band, odd_random)" },
    KeySpec { key: "initial_data.top_index", default: Derived("floor(L), clamped below N/2"), help: "largest populated |k|" },
    KeySpec { key: "initial_data.amplitude", default: Literal("1e-2"), help: "RMS of random data, peak of single_mode data" },
    KeySpec { key: "initial_data.k", default: Literal("1"), help: "single_mode index (integer, or [k1, k2] in 2D)" },
    KeySpec { key: "initial_data.path", default: Conditional("required for from_checkpoint"), help: "checkpoint to restart from" },
    KeySpec { key: "diagnostics.p", default: Literal("[4.0, 8.0]"), help: "L^p exponents recorded (\"inf\" allowed)" },
    KeySpec { key: "diagnostics.s", default: Literal("[1.0, 2.0]"), help: "H^s orders recorded" },
    KeySpec { key: "diagnostics.c", default: Literal("1.0"), help: "tail multiplier c in M_j = c 2^j L, or \"H^(2/5)\"" },
    KeySpec { key: "diagnostics.j_max", default: Literal("10"), help: "largest dyadic index" },
    KeySpec { key: "diagnostics.noise_floor", default: Literal("1e-12"), help: "relative floor: tails below (floor*|u|)^2 are dropped" },
    KeySpec { key: "diagnostics.C", default: Literal("1.0"), help: "constant C in the j0 rules" },
    KeySpec { key: "output", default: Literal("\"out\""), help: "output directory (overridden by --out)" },
    KeySpec { key: "sweep.L_values", default: Literal("[]"), help: "half periods for the sweep subcommand" },
    KeySpec { key: "sweep.observable", default: Literal("\"sup_L2\""), help: "sup_L2, sup_Hs(s) or sup_Lp(p)" },
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialData {
    RandomBand { seed: u64, top_index: Option<usize>, amplitude: f64 },
    SingleMode { k: Vec<i64>, amplitude: f64 },
    OddRandom { seed: u64, top_index: Option<usize>, amplitude: f64 },
    FromCheckpoint { path: PathBuf },
}

/// Tail multiplier `c` in the thresholds `M_j = c·2^j·L`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum TailMultiplier {
    Fixed(f64),
    /// `c = H^{2/5}` with `H` the sup of the sampled `L²` norms.
    AttractorScaled,
}

impl TailMultiplier {
    pub fn resolve(&self, h: f64) -> f64 {
        match *self {
            TailMultiplier::Fixed(c) => c,
            TailMultiplier::AttractorScaled => h.powf(0.4),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsConfig {
    pub p_values: Vec<f64>,
    pub s_values: Vec<f64>,
    pub multiplier: TailMultiplier,
    pub j_max: u32,
    pub noise_floor: f64,
    /// The constant `C` of the `j₀` rules.
    pub constant: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Observable {
    SupL2,
    SupHs(f64),
    SupLp(f64),
}

impl Observable {
    pub fn parse(text: &str) -> Option<Self> {
        let t = text.trim();
        if t.eq_ignore_ascii_case("sup_l2") {
            return Some(Observable::SupL2);
        }
        let arg = |prefix: &str| {
            let lower = t.to_ascii_lowercase();
            let inner = lower.strip_prefix(prefix)?.strip_prefix('(')?.strip_suffix(')')?.to_string();
            parse_exponent(&inner)
        };
        arg("sup_hs").map(Observable::SupHs).or_else(|| arg("sup_lp").map(Observable::SupLp))
    }

    pub fn name(&self) -> String {
        match self {
            Observable::SupL2 => "sup_L2".into(),
            Observable::SupHs(s) => format!("sup_Hs({})", fmt_num(*s)),
            Observable::SupLp(p) => format!("sup_Lp({})", fmt_num(*p)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub l_values: Vec<f64>,
    pub observable: Observable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub grid: Grid,
    pub stepping: SteppingConfig,
    pub initial_data: InitialData,
    pub diagnostics: DiagnosticsConfig,
    pub output: PathBuf,
    pub sweep: SweepConfig,
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn fmt_num(x: f64) -> String {
    if x.is_infinite() {
        "inf".into()
    } else {
        format!("{x:?}")
    }
}

fn parse_exponent(text: &str) -> Option<f64> {
    let t = text.trim();
    if t.eq_ignore_ascii_case("inf") || t == "∞" {
        return Some(f64::INFINITY);
    }
    t.parse().ok()
}

/// Parses a half period: a number, `pi`, or a multiple such as `25pi`, `25*pi`, `2.5π`.
pub fn parse_half_length(text: &str) -> Option<f64> {
    let t = text.trim().to_ascii_lowercase().replace('π', "pi");
    if let Some(coef) = t.strip_suffix("pi") {
        let coef = coef.trim().trim_end_matches('*').trim();
        let c: f64 = if coef.is_empty() { 1.0 } else { coef.parse().ok()? };
        return Some(c * std::f64::consts::PI);
    }
    t.parse().ok()
}

/// Parses an override value as TOML, falling back to a bare string.
pub fn parse_override_value(text: &str) -> Value {
    match toml::from_str::<toml::Table>(&format!("v = {text}")) {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| Value::String(text.to_string())),
        Err(_) => Value::String(text.trim().to_string()),
    }
}

/// Flattened key → value table with schema lookups.
#[derive(Clone, Debug, Default)]
pub struct ConfigTable {
    values: BTreeMap<String, Value>,
}

impl ConfigTable {
    pub fn from_toml(text: &str) -> Result<Self> {
        let table: toml::Table = toml::from_str(text).map_err(|e| config_err(format!("malformed config: {e}")))?;
        let mut values = BTreeMap::new();
        flatten("", &Value::Table(table), &mut values);
        let out = Self { values };
        out.check_keys()?;
        Ok(out)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Applies one `key=value` override.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| config_err(format!("override `{assignment}` is not KEY=VALUE")))?;
        let key = key.trim();
        if !KEYS.iter().any(|k| k.key == key) {
            return Err(config_err(format!("unknown key `{key}`")));
        }
        self.values.insert(key.to_string(), parse_override_value(value));
        Ok(())
    }

    pub fn insert(&mut self, key: &str, value: Value) {
        self.values.insert(key.to_string(), value);
    }

    fn check_keys(&self) -> Result<()> {
        for key in self.values.keys() {
            if !KEYS.iter().any(|k| k.key == key) {
                return Err(config_err(format!("unknown key `{key}`")));
            }
        }
        Ok(())
    }

    fn get(&self, key: &str) -> Option<Value> {
        if let Some(v) = self.values.get(key) {
            return Some(v.clone());
        }
        let spec = KEYS.iter().find(|k| k.key == key)?;
        match spec.default {
            Literal(text) => Some(parse_override_value(text)),
            _ => None,
        }
    }

    fn is_set(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    fn f64(&self, key: &str) -> Result<f64> {
        match self.get(key) {
            Some(Value::Float(x)) => Ok(x),
            Some(Value::Integer(i)) => Ok(i as f64),
            Some(Value::String(s)) => parse_exponent(&s).ok_or_else(|| type_err(key, "a number")),
            Some(_) => Err(type_err(key, "a number")),
            None => Err(config_err(format!("missing key `{key}`"))),
        }
    }

    fn opt_u64(&self, key: &str) -> Result<Option<u64>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Integer(i)) if i >= 0 => Ok(Some(i as u64)),
            Some(_) => Err(type_err(key, "a nonnegative integer")),
        }
    }

    fn u64(&self, key: &str) -> Result<u64> {
        self.opt_u64(key)?.ok_or_else(|| config_err(format!("missing key `{key}`")))
    }

    fn bool(&self, key: &str) -> Result<bool> {
        match self.get(key) {
            Some(Value::Boolean(b)) => Ok(b),
            _ => Err(type_err(key, "a boolean")),
        }
    }

    fn string(&self, key: &str) -> Result<String> {
        match self.get(key) {
            Some(Value::String(s)) => Ok(s),
            Some(_) => Err(type_err(key, "a string")),
            None => Err(config_err(format!("missing key `{key}`"))),
        }
    }

    fn f64_list(&self, key: &str) -> Result<Vec<f64>> {
        let items = match self.get(key) {
            Some(Value::Array(a)) => a,
            Some(other) => vec![other],
            None => vec![],
        };
        items
            .into_iter()
            .map(|v| match v {
                Value::Float(x) => Ok(x),
                Value::Integer(i) => Ok(i as f64),
                Value::String(s) => parse_exponent(&s)
                    .or_else(|| parse_half_length(&s))
                    .ok_or_else(|| type_err(key, "a list of numbers")),
                _ => Err(type_err(key, "a list of numbers")),
            })
            .collect()
    }

    fn half_length(&self, key: &str) -> Result<f64> {
        match self.get(key) {
            Some(Value::String(s)) => parse_half_length(&s).ok_or_else(|| type_err(key, "a number or a multiple of pi")),
            _ => self.f64(key),
        }
    }

    pub fn build(&self) -> Result<ExperimentConfig> {
        self.check_keys()?;
        let variant = self.string("model.variant")?;
        let model_d = self.opt_u64("model.d")?;
        let grid_d = self.opt_u64("grid.d")?;
        if let (Some(a), Some(b)) = (model_d, grid_d) {
            if a != b {
                return Err(config_err(format!("model.d = {a} disagrees with grid.d = {b}")));
            }
        }
        let d_given = model_d.or(grid_d).map(|d| d as usize);
        let equation = match variant.to_ascii_lowercase().as_str() {
            "ks1d" => Equation::Ks1d,
            "ks2d" => Equation::Ks2d,
            "regburgers" => Equation::RegBurgers { order: self.f64("model.s")?, dim: d_given.unwrap_or(1) },
            "destabilizedks1d" | "destabilizedks" => Equation::DestabilizedKs1d { eta: self.f64("model.eta")? },
            _ => return Err(config_err(format!("unknown model.variant `{variant}`"))),
        };
        let model = ModelSpec::new(equation, self.bool("model.linear_only")?).map_err(to_config)?;
        if let Some(d) = d_given {
            if d != model.dim() {
                return Err(config_err(format!("{variant} is {}-dimensional, config says d = {d}", model.dim())));
            }
        }
        let modes = self.u64("grid.N")? as usize;
        let grid = Grid::new(model.dim(), self.half_length("grid.L")?, modes).map_err(to_config)?;

        let scheme_name = self.string("stepping.scheme")?;
        let stepping = SteppingConfig {
            scheme: Scheme::parse(&scheme_name)
                .ok_or_else(|| config_err(format!("unknown stepping.scheme `{scheme_name}`")))?,
            dt: self.f64("stepping.dt")?,
            t_end: self.f64("stepping.t_end")?,
            sample_interval: self.f64("stepping.sample_interval")?,
            max_amplitude: self.f64("stepping.max_amplitude")?,
            min_dt: self.f64("stepping.min_dt")?,
        };
        stepping.validate().map_err(to_config)?;

        let kind = self.string("initial_data.kind")?;
        let top_index = self.opt_u64("initial_data.top_index")?.map(|t| t as usize);
        if let Some(t) = top_index {
            if t >= grid.nyquist() {
                return Err(config_err(format!("initial_data.top_index = {t} must be below N/2 = {}", grid.nyquist())));
            }
        }
        let seed = self.u64("initial_data.seed")?;
        let amplitude = self.f64("initial_data.amplitude")?;
        let initial_data = match kind.as_str() {
            "random_band" => InitialData::RandomBand { seed, top_index, amplitude },
            "odd_random" => InitialData::OddRandom { seed, top_index, amplitude },
            "single_mode" => {
                let k = match self.get("initial_data.k") {
                    Some(Value::Integer(i)) => {
                        let mut k = vec![0; grid.dim()];
                        k[0] = i;
                        k
                    }
                    Some(Value::Array(a)) => a
                        .iter()
                        .map(|v| v.as_integer().ok_or_else(|| type_err("initial_data.k", "integers")))
                        .collect::<Result<Vec<i64>>>()?,
                    _ => return Err(type_err("initial_data.k", "an integer or a list of integers")),
                };
                if k.len() != grid.dim() || grid.slot(&k).is_none() || k.iter().any(|&ki| ki.unsigned_abs() as usize >= grid.nyquist()) {
                    return Err(config_err(format!("initial_data.k = {k:?} is not a retained non-Nyquist index")));
                }
                InitialData::SingleMode { k, amplitude }
            }
            "from_checkpoint" => {
                if !self.is_set("initial_data.path") {
                    return Err(config_err("initial_data.path is required for from_checkpoint"));
                }
                InitialData::FromCheckpoint { path: PathBuf::from(self.string("initial_data.path")?) }
            }
            _ => return Err(config_err(format!("unknown initial_data.kind `{kind}`"))),
        };
        if !matches!(initial_data, InitialData::FromCheckpoint { .. }) && !(amplitude.is_finite() && amplitude >= 0.0) {
            return Err(config_err("initial_data.amplitude must be finite and >= 0"));
        }

        let multiplier = match self.get("diagnostics.c") {
            Some(Value::String(s)) if matches!(s.replace(' ', "").to_ascii_lowercase().as_str(), "h^(2/5)" | "h^0.4") => {
                TailMultiplier::AttractorScaled
            }
            _ => TailMultiplier::Fixed(self.f64("diagnostics.c")?),
        };
        if let TailMultiplier::Fixed(c) = multiplier {
            if !(c > 0.0 && c.is_finite()) {
                return Err(config_err("diagnostics.c must be positive"));
            }
        }
        let p_values = self.f64_list("diagnostics.p")?;
        if p_values.iter().any(|&p| !(p >= 1.0)) {
            return Err(config_err("diagnostics.p entries must be >= 1"));
        }
        let s_values = self.f64_list("diagnostics.s")?;
        if s_values.iter().any(|&s| !(s >= 0.0 && s.is_finite())) {
            return Err(config_err("diagnostics.s entries must be finite and >= 0"));
        }
        let noise_floor = self.f64("diagnostics.noise_floor")?;
        let constant = self.f64("diagnostics.C")?;
        if !(noise_floor >= 0.0) || !(constant > 0.0) {
            return Err(config_err("diagnostics.noise_floor must be >= 0 and diagnostics.C > 0"));
        }
        let diagnostics = DiagnosticsConfig {
            p_values,
            s_values,
            multiplier,
            j_max: self.u64("diagnostics.j_max")? as u32,
            noise_floor,
            constant,
        };

        let observable_text = self.string("sweep.observable")?;
        let sweep = SweepConfig {
            l_values: self.f64_list("sweep.L_values")?,
            observable: Observable::parse(&observable_text)
                .ok_or_else(|| config_err(format!("unknown sweep.observable `{observable_text}`")))?,
        };
        if sweep.l_values.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return Err(config_err("sweep.L_values must be positive"));
        }

        Ok(ExperimentConfig {
            model,
            grid,
            stepping,
            initial_data,
            diagnostics,
            output: PathBuf::from(self.string("output")?),
            sweep,
        })
    }
}

fn type_err(key: &str, expected: &str) -> Error {
    config_err(format!("`{key}` must be {expected}"))
}

fn to_config(e: Error) -> Error {
    match e {
        Error::Contract(m) => Error::Config(m),
        other => other,
    }
}

fn flatten(prefix: &str, value: &Value, out: &mut BTreeMap<String, Value>) {
    match value {
        Value::Table(t) => {
            for (k, v) in t {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, out);
            }
        }
        other => {
            out.insert(prefix.to_string(), other.clone());
        }
    }
}

impl ExperimentConfig {
    /// Parses a config file and applies overrides in order.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut table = match path {
            Some(p) => ConfigTable::from_file(p)?,
            None => ConfigTable::default(),
        };
        for o in overrides {
            table.set(o)?;
        }
        table.build()
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        ConfigTable::from_toml(text)?.build()
    }

    /// Default `top_index`: `⌊L⌋` clamped below `N/2`.
    pub fn resolved_top_index(&self, top_index: Option<usize>) -> usize {
        top_index.unwrap_or_else(|| (self.grid.half_length().floor() as usize).min(self.grid.nyquist() - 1))
    }

    /// Canonical TOML text; parsing it back yields an equal config.
    pub fn to_toml(&self) -> String {
        let mut s = String::new();
        let (variant, order, eta) = match self.model.equation {
            Equation::Ks1d => ("KS1D", None, None),
            Equation::Ks2d => ("KS2D", None, None),
            Equation::RegBurgers { order, .. } => ("RegBurgers", Some(order), None),
            Equation::DestabilizedKs1d { eta } => ("DestabilizedKS1D", None, Some(eta)),
        };
        let list = |v: &[f64]| {
            let items: Vec<String> = v
                .iter()
                .map(|&x| if x.is_infinite() { "\"inf\"".to_string() } else { format!("{x:?}") })
                .collect();
            format!("[{}]", items.join(", "))
        };
        let _ = writeln!(s, "output = {}", toml_str(&self.output.to_string_lossy()));
        let _ = writeln!(s, "\n[model]\nvariant = \"{variant}\"");
        if let Some(order) = order {
            let _ = writeln!(s, "s = {order:?}");
        }
        if let Some(eta) = eta {
            let _ = writeln!(s, "eta = {eta:?}");
        }
        let _ = writeln!(s, "d = {}\nlinear_only = {}", self.model.dim(), self.model.linear_only);
        let _ = writeln!(s, "\n[grid]\nL = {:?}\nN = {}", self.grid.half_length(), self.grid.modes());
        let st = &self.stepping;
        let _ = writeln!(
            s,
            "\n[stepping]\nscheme = \"{}\"\ndt = {:?}\nt_end = {:?}\nsample_interval = {:?}\nmax_amplitude = {:?}\nmin_dt = {:?}",
            st.scheme.name(),
            st.dt,
            st.t_end,
            st.sample_interval,
            st.max_amplitude,
            st.min_dt
        );
        let _ = writeln!(s, "\n[initial_data]");
        match &self.initial_data {
            InitialData::RandomBand { seed, top_index, amplitude } | InitialData::OddRandom { seed, top_index, amplitude } => {
                let kind = if matches!(self.initial_data, InitialData::RandomBand { .. }) { "random_band" } else { "odd_random" };
                let _ = writeln!(s, "kind = \"{kind}\"\nseed = {seed}\namplitude = {amplitude:?}");
                if let Some(t) = top_index {
                    let _ = writeln!(s, "top_index = {t}");
                }
            }
            InitialData::SingleMode { k, amplitude } => {
                let ks: Vec<String> = k.iter().map(|x| x.to_string()).collect();
                let _ = writeln!(s, "kind = \"single_mode\"\nk = [{}]\namplitude = {amplitude:?}", ks.join(", "));
            }
            InitialData::FromCheckpoint { path } => {
                let _ = writeln!(s, "kind = \"from_checkpoint\"\npath = {}", toml_str(&path.to_string_lossy()));
            }
        }
        let dg = &self.diagnostics;
        let c = match dg.multiplier {
            TailMultiplier::Fixed(c) => format!("{c:?}"),
            TailMultiplier::AttractorScaled => "\"H^(2/5)\"".into(),
        };
        let _ = writeln!(
            s,
            "\n[diagnostics]\np = {}\ns = {}\nc = {c}\nj_max = {}\nnoise_floor = {:?}\nC = {:?}",
            list(&dg.p_values),
            list(&dg.s_values),
            dg.j_max,
            dg.noise_floor,
            dg.constant
        );
        let _ = writeln!(
            s,
            "\n[sweep]\nL_values = {}\nobservable = \"{}\"",
            list(&self.sweep.l_values),
            self.sweep.observable.name()
        );
        s
    }
}

fn toml_str(s: &str) -> String {
    Value::String(s.to_string()).to_string()
}

/// Help text listing every key with its default.
pub fn defaults_table() -> String {
    let mut s = String::from("Config keys (defaults in brackets):\n");
    for k in KEYS {
        let d = match k.default {
            Literal(v) | Derived(v) | Conditional(v) => v,
        };
        let _ = writeln!(s, "  {:<26} [{d}]  {}", k.key, k.help);
    }
    s
}
