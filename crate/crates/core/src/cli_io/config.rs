//! TOML run configuration: sections `[grid]`, `[operator]`, `[reaction]`,
//! `[solver]` and `[experiment]`, unknown keys rejected, every default
//! resolved and echoed. Overrides from `MIXKPP_<SECTION>_<KEY>` environment
//! variables and CLI flags are merged into the table before validation.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::dynamics::{ReactionKPP, Scheme, SolverConfig};
use crate::error::{Error, Result};
use crate::fronts::{InitialData, Regime, SpreadConfig};
use crate::grid::{SymbolSpec, UniformGrid};
use crate::kernels::KernelKind;
use crate::semigroup::{PowerLawBarrier, WeightedNorm};

pub const ENV_PREFIX: &str = "MIXKPP_";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub dim: usize,
    pub n: usize,
    #[serde(rename = "L")]
    pub half_width: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            dim: 1,
            n: 4096,
            half_width: 256.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OperatorSection {
    pub s: f64,
    pub local: bool,
    pub fractional: bool,
    /// Weight exponent of `X_gamma`.
    pub gamma: f64,
}

impl Default for OperatorSection {
    fn default() -> Self {
        Self {
            s: 0.5,
            local: true,
            fractional: true,
            gamma: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReactionSection {
    pub form: String,
    pub rate: f64,
}

impl Default for ReactionSection {
    fn default() -> Self {
        Self {
            form: "logistic".into(),
            rate: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub scheme: Scheme,
    pub dt: f64,
    pub t_end: f64,
    pub picard_tol: f64,
    pub picard_max_iters: usize,
    pub boundary_guard: f64,
    pub snapshot_stride: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverConfig::default();
        Self {
            scheme: d.scheme,
            dt: d.dt,
            t_end: d.t_end,
            picard_tol: d.picard_tol,
            picard_max_iters: d.picard_max_iters,
            boundary_guard: d.boundary_guard,
            snapshot_stride: d.snapshot_stride,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    pub seed: u64,
    /// `classical`, `fractional`, `mixed` or `all`.
    pub regime: String,
    pub thresholds: Vec<f64>,
    pub fit_window: [f64; 2],
    pub sample_every: f64,
    pub rate_tolerance: f64,
    /// `plateau`, `indicator` or `barrier`.
    pub initial: String,
    pub initial_radius: f64,
    pub initial_width: f64,
    pub initial_height: f64,
    pub barrier_a0: f64,
    pub barrier_r0: f64,
    pub barrier_sigma: f64,
    pub barrier_t0: f64,
    pub barrier_k_max: usize,
    pub kernel_kinds: Vec<String>,
    pub kernel_times: Vec<f64>,
    /// Subset of `mass`, `symmetry`, `bounds`, `scaling`, `ck`, `oracle`.
    pub kernel_checks: Vec<String>,
    /// Subset of `kernel`, `semigroup`, `barriers`, `maxprinciple`.
    pub verify_suites: Vec<String>,
    pub verify_times: Vec<f64>,
    pub wave_widths: Vec<f64>,
    pub wave_speed_max: f64,
    pub wave_speed_step: f64,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            seed: 0,
            regime: "all".into(),
            thresholds: vec![0.5, 0.1, 0.9],
            fit_window: [8.0, 16.0],
            sample_every: 0.1,
            rate_tolerance: 0.15,
            initial: "plateau".into(),
            initial_radius: 4.0,
            initial_width: 1.0,
            initial_height: 1.0,
            barrier_a0: 0.1,
            barrier_r0: 1.0,
            barrier_sigma: 0.35,
            barrier_t0: 2.0,
            barrier_k_max: 5,
            kernel_kinds: vec!["gaussian".into(), "fractional".into(), "mixed".into()],
            kernel_times: vec![2.0, 4.0, 10.0],
            kernel_checks: ["mass", "symmetry", "bounds", "oracle"].map(String::from).to_vec(),
            verify_suites: VERIFY_SUITES.map(String::from).to_vec(),
            verify_times: vec![1.0, 4.0, 16.0],
            wave_widths: vec![0.5, 1.0, 2.0],
            wave_speed_max: 10.0,
            wave_speed_step: 0.1,
        }
    }
}

/// A fully resolved and validated configuration.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub grid: GridSection,
    pub operator: OperatorSection,
    pub reaction: ReactionSection,
    pub solver: SolverSection,
    pub experiment: ExperimentSection,
}

pub const KERNEL_CHECKS: [&str; 6] = ["mass", "symmetry", "bounds", "scaling", "ck", "oracle"];
pub const VERIFY_SUITES: [&str; 4] = ["kernel", "semigroup", "barriers", "maxprinciple"];

pub const SECTIONS: [&str; 5] = ["grid", "operator", "reaction", "solver", "experiment"];

/// Keys of each section, in declaration order.
pub fn section_keys(section: &str) -> Option<Vec<String>> {
    let d = RunConfig::default();
    let value = match section {
        "grid" => serde_json::to_value(&d.grid),
        "operator" => serde_json::to_value(&d.operator),
        "reaction" => serde_json::to_value(&d.reaction),
        "solver" => serde_json::to_value(&d.solver),
        "experiment" => serde_json::to_value(&d.experiment),
        _ => return None,
    }
    .expect("sections serialize");
    Some(value.as_object().expect("object").keys().cloned().collect())
}

fn config_err(key: impl Into<String>, message: impl Into<String>) -> Error {
    Error::config(key, message)
}

/// Parses a scalar override the way TOML would, falling back to a bare string.
pub fn parse_override_value(raw: &str) -> Value {
    match format!("v = {raw}").parse::<Table>() {
        Ok(mut t) if t.len() == 1 => t.remove("v").unwrap_or_else(|| Value::String(raw.into())),
        _ => Value::String(raw.to_string()),
    }
}

/// One override `section.key = value`.
#[derive(Debug, Clone, PartialEq)]
pub struct Override {
    pub section: String,
    pub key: String,
    pub value: Value,
}

impl Override {
    /// `section.key` must name a known key (matched case-insensitively).
    pub fn new(section: &str, key: &str, value: Value) -> Result<Self> {
        let section_l = section.to_ascii_lowercase();
        let keys = section_keys(&section_l).ok_or_else(|| config_err(section, "unknown section"))?;
        let key = keys
            .into_iter()
            .find(|k| k.eq_ignore_ascii_case(key))
            .ok_or_else(|| config_err(format!("{section_l}.{key}"), "unknown key"))?;
        Ok(Self {
            section: section_l,
            key,
            value,
        })
    }
}

/// `MIXKPP_SOLVER_T_END=16` becomes `solver.t_end = 16`. Variables without
/// the prefix are ignored; prefixed names that do not map to a key are errors.
pub fn env_overrides<I, K, V>(vars: I) -> Result<Vec<Override>>
where
    I: IntoIterator<Item = (K, V)>,
    K: AsRef<str>,
    V: AsRef<str>,
{
    let mut out = Vec::new();
    for (name, value) in vars {
        let name = name.as_ref();
        let Some(rest) = name.strip_prefix(ENV_PREFIX) else {
            continue;
        };
        let (section, key) = rest
            .split_once('_')
            .ok_or_else(|| config_err(name, "expected MIXKPP_<SECTION>_<KEY>"))?;
        out.push(Override::new(section, key, parse_override_value(value.as_ref()))?);
    }
    Ok(out)
}

fn section<T: DeserializeOwned + Default>(table: &mut Table, name: &str) -> Result<T> {
    match table.remove(name) {
        None => Ok(T::default()),
        Some(Value::Table(t)) => T::deserialize(Value::Table(t)).map_err(|e| {
            let message = e.message().to_string();
            let key = message
                .split('`')
                .nth(1)
                .filter(|_| message.starts_with("unknown field") || message.starts_with("invalid type"))
                .map_or_else(|| name.to_string(), |k| format!("{name}.{k}"));
            config_err(key, message)
        }),
        Some(_) => Err(config_err(name, "expected a table")),
    }
}

/// Parses configuration text, applies `overrides` in order and validates.
pub fn parse_config_str(text: &str, overrides: &[Override]) -> Result<RunConfig> {
    let mut table: Table = text
        .parse()
        .map_err(|e: toml::de::Error| config_err("<document>", e.message().to_string()))?;
    if let Some(unknown) = table.keys().find(|k| !SECTIONS.contains(&k.as_str())) {
        return Err(config_err(unknown.clone(), "unknown section"));
    }
    for o in overrides {
        let entry = table
            .entry(o.section.clone())
            .or_insert_with(|| Value::Table(Table::new()));
        match entry {
            Value::Table(t) => {
                t.insert(o.key.clone(), o.value.clone());
            }
            _ => return Err(config_err(o.section.clone(), "expected a table")),
        }
    }
    let config = RunConfig {
        grid: section(&mut table, "grid")?,
        operator: section(&mut table, "operator")?,
        reaction: section(&mut table, "reaction")?,
        solver: section(&mut table, "solver")?,
        experiment: section(&mut table, "experiment")?,
    };
    config.validate()?;
    Ok(config)
}

/// Reads `path` (or the defaults when `None`) and applies `overrides`.
pub fn parse_config(path: Option<&Path>, overrides: &[Override]) -> Result<RunConfig> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?,
        None => String::new(),
    };
    parse_config_str(&text, overrides)
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let g = &self.grid;
        if g.dim != 1 && g.dim != 2 {
            return Err(config_err("grid.dim", format!("must be 1 or 2, got {}", g.dim)));
        }
        if !g.n.is_power_of_two() || g.n < 8 {
            return Err(config_err("grid.n", format!("must be a power of two >= 8, got {}", g.n)));
        }
        if !(g.half_width > 0.0 && g.half_width.is_finite()) {
            return Err(config_err("grid.L", format!("must be positive, got {}", g.half_width)));
        }
        self.grid()?;
        let o = &self.operator;
        if !(o.s > 0.0 && o.s < 1.0) {
            return Err(config_err("operator.s", format!("must lie in (0, 1), got {}", o.s)));
        }
        if !(o.local || o.fractional) {
            return Err(config_err("operator.local", "at least one of local, fractional must be on"));
        }
        if o.gamma >= 2.0 * o.s {
            return Err(config_err(
                "operator.gamma",
                format!("gamma must be < 2s (gamma = {}, 2s = {})", o.gamma, 2.0 * o.s),
            ));
        }
        self.weight()?;
        if self.reaction.form != "logistic" {
            return Err(config_err(
                "reaction.form",
                format!("only `logistic` is configurable, got `{}`", self.reaction.form),
            ));
        }
        let reaction = self.reaction()?;
        self.solver().validate(&reaction).map_err(|e| match e {
            Error::InvalidParameter { name, reason } => config_err(format!("solver.{name}"), reason),
            other => other,
        })?;
        let x = &self.experiment;
        if x.regime != "all" {
            x.regime.parse::<Regime>().map_err(|e| config_err("experiment.regime", e.to_string()))?;
        }
        if x.thresholds.is_empty() || x.thresholds.iter().any(|&l| !(l > 0.0 && l < 1.0)) {
            return Err(config_err("experiment.thresholds", "need levels in (0, 1)"));
        }
        if !(x.fit_window[1] > x.fit_window[0]) {
            return Err(config_err("experiment.fit_window", "need t_min < t_max"));
        }
        if !(x.sample_every > 0.0) {
            return Err(config_err("experiment.sample_every", "must be positive"));
        }
        if !(x.rate_tolerance > 0.0) {
            return Err(config_err("experiment.rate_tolerance", "must be positive"));
        }
        self.initial_data()?;
        self.barrier()?;
        self.kernel_kinds()?;
        for (key, given, known) in [
            ("experiment.kernel_checks", &x.kernel_checks, &KERNEL_CHECKS[..]),
            ("experiment.verify_suites", &x.verify_suites, &VERIFY_SUITES[..]),
        ] {
            if let Some(bad) = given.iter().find(|g| !known.contains(&g.as_str())) {
                return Err(config_err(key, format!("unknown entry `{bad}`, expected one of {known:?}")));
            }
        }
        if x.kernel_times.iter().chain(&x.verify_times).any(|&t| !(t > 0.0 && t.is_finite())) {
            return Err(config_err("experiment.kernel_times", "times must be positive"));
        }
        if x.wave_widths.iter().any(|&w| !(w > 0.0)) {
            return Err(config_err("experiment.wave_widths", "widths must be positive"));
        }
        if !(x.wave_speed_step > 0.0 && x.wave_speed_max >= 0.0) {
            return Err(config_err("experiment.wave_speed_step", "need step > 0 and max >= 0"));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<UniformGrid> {
        UniformGrid::new(self.grid.dim, self.grid.n, self.grid.half_width)
            .map_err(|e| config_err("grid", e.to_string()))
    }

    pub fn symbol(&self) -> Result<SymbolSpec> {
        SymbolSpec::new(self.operator.s, self.operator.local, self.operator.fractional)
            .map_err(|e| config_err("operator", e.to_string()))
    }

    pub fn weight(&self) -> Result<WeightedNorm> {
        WeightedNorm::new(self.operator.gamma, self.operator.s).map_err(|e| config_err("operator.gamma", e.to_string()))
    }

    pub fn reaction(&self) -> Result<ReactionKPP> {
        ReactionKPP::logistic(self.reaction.rate).map_err(|e| config_err("reaction.rate", e.to_string()))
    }

    pub fn solver(&self) -> SolverConfig {
        let s = &self.solver;
        SolverConfig {
            dt: s.dt,
            t_end: s.t_end,
            scheme: s.scheme,
            picard_tol: s.picard_tol,
            picard_max_iters: s.picard_max_iters,
            boundary_guard: s.boundary_guard,
            snapshot_stride: s.snapshot_stride,
        }
    }

    pub fn initial_data(&self) -> Result<InitialData> {
        let x = &self.experiment;
        let data = match x.initial.as_str() {
            "plateau" => InitialData::Plateau {
                radius: x.initial_radius,
                width: x.initial_width,
                height: x.initial_height,
            },
            "indicator" => InitialData::Indicator {
                radius: x.initial_radius,
                height: x.initial_height,
            },
            "barrier" => InitialData::Barrier {
                a0: x.barrier_a0,
                r0: x.barrier_r0,
            },
            other => return Err(config_err("experiment.initial", format!("unknown initial data `{other}`"))),
        };
        let probe = UniformGrid::new(self.grid.dim, 8, self.grid.half_width.max(1.0))?;
        data.sample(&probe, self.operator.s)
            .map_err(|e| config_err("experiment.initial", e.to_string()))?;
        Ok(data)
    }

    pub fn barrier(&self) -> Result<PowerLawBarrier> {
        let x = &self.experiment;
        PowerLawBarrier::new(x.barrier_a0, x.barrier_r0, self.operator.s, self.grid.dim)
            .map_err(|e| config_err("experiment.barrier_a0", e.to_string()))
    }

    pub fn kernel_kinds(&self) -> Result<Vec<KernelKind>> {
        self.experiment
            .kernel_kinds
            .iter()
            .map(|k| k.parse::<KernelKind>().map_err(|e| config_err("experiment.kernel_kinds", e.to_string())))
            .collect()
    }

    pub fn regimes(&self) -> Vec<Regime> {
        match self.experiment.regime.parse::<Regime>() {
            Ok(r) => vec![r],
            Err(_) => Regime::ALL.to_vec(),
        }
    }

    pub fn spread_config(&self) -> Result<SpreadConfig> {
        let x = &self.experiment;
        Ok(SpreadConfig {
            dim: self.grid.dim,
            n: self.grid.n,
            half_width: self.grid.half_width,
            s: self.operator.s,
            rate: self.reaction.rate,
            dt: self.solver.dt,
            t_end: self.solver.t_end,
            scheme: self.solver.scheme,
            thresholds: x.thresholds.clone(),
            fit_window: (x.fit_window[0], x.fit_window[1]),
            sample_every: x.sample_every,
            initial: self.initial_data()?,
            boundary_guard: self.solver.boundary_guard,
            rate_tolerance: x.rate_tolerance,
        })
    }

    /// The resolved configuration as TOML text.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
