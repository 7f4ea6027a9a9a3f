//! JSON run configuration: strict schema, defaults, environment overrides.

use std::path::{Path, PathBuf};

use pflow_core::model::{PowerLaw, Preset};
use pflow_core::{DensityProfile, FluidModel, InitialData, IntegratorConfig, VelocityProfile};
use serde::Deserialize;

use crate::error::{CliError, CliResult};

/// Environment variables consulted after the file is parsed.
pub const ENV_REL_TOL: &str = "PFLOW_REL_TOL";
pub const ENV_ABS_TOL: &str = "PFLOW_ABS_TOL";

pub const DEFAULT_GRID_SIZE: usize = 512;
pub const DEFAULT_T_FINAL: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerSpec {
    pub coef: f64,
    pub exponent: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    SaintVenant { g: f64, nu: f64 },
    IsentropicGas { c: f64, gamma: f64, mu0: f64, eta: f64 },
    IdealGasEntropy { c: f64, gamma: f64, a: f64 },
    /// `P = coef·ρ^exponent`, `μ = coef·ρ^exponent` without closed forms.
    Power { pressure: PowerSpec, viscosity: PowerSpec },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum DensitySpec {
    Constant { value: f64 },
    Table { x: Vec<f64>, rho: Vec<f64> },
    Cosine { mean: f64, amplitude: f64, mode: u32 },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum VelocitySpec {
    Zero,
    Sine { amplitude: f64, mode: u32 },
    Table { x: Vec<f64>, v: Vec<f64> },
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct InitialSpec {
    rho0: Option<DensitySpec>,
    v0: Option<VelocitySpec>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct IntegratorSpec {
    rel_tol: Option<f64>,
    abs_tol: Option<f64>,
    snapshot_dt: Option<f64>,
    #[serde(rename = "T")]
    t_final: Option<f64>,
    dt_max: Option<f64>,
    dt_init: Option<f64>,
    max_steps: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: ModelSpec,
    #[serde(default = "unit")]
    m: f64,
    #[serde(rename = "L", default = "unit")]
    length: f64,
    #[serde(default)]
    initial: InitialSpec,
    #[serde(default)]
    integrator: IntegratorSpec,
    n: Option<usize>,
    n_list: Option<Vec<usize>>,
    output: Option<PathBuf>,
    grid_size: Option<usize>,
    seed: Option<u64>,
}

fn unit() -> f64 {
    1.0
}

/// A fully validated run description.
#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub model_spec: ModelSpec,
    pub model: FluidModel,
    pub initial: InitialData,
    pub integrator: IntegratorConfig,
    pub t_final: f64,
    pub n: Option<usize>,
    pub n_list: Option<Vec<usize>>,
    pub output: Option<PathBuf>,
    pub grid_size: usize,
    /// Reserved; no part of the pipeline is random.
    pub seed: Option<u64>,
}

impl SimulationConfig {
    /// The single particle count, required by `simulate` and `validate`.
    pub fn require_n(&self) -> CliResult<usize> {
        self.n.ok_or_else(|| CliError::config("n", "missing field `n`"))
    }
}

/// Reads and validates a config file, applying `PFLOW_*` overrides from the process environment.
pub fn parse_config(path: &Path) -> CliResult<SimulationConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.to_path_buf(), source })?;
    parse_config_str(&text, |name| std::env::var(name).ok())
}

/// Parses config text; `env` looks up override variables by name.
pub fn parse_config_str(text: &str, env: impl Fn(&str) -> Option<String>) -> CliResult<SimulationConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::config(path, e.into_inner().to_string())
    })?;
    resolve(raw, env)
}

fn build_model(spec: ModelSpec, m: f64, length: f64) -> pflow_core::Result<FluidModel> {
    match spec {
        ModelSpec::SaintVenant { g, nu } => FluidModel::preset(Preset::SaintVenant { g, nu }, m, length),
        ModelSpec::IsentropicGas { c, gamma, mu0, eta } => FluidModel::preset(Preset::IsentropicGas { c, gamma, mu0, eta }, m, length),
        ModelSpec::IdealGasEntropy { c, gamma, a } => FluidModel::preset(Preset::IdealGasEntropy { c, gamma, a }, m, length),
        ModelSpec::Power { pressure, viscosity } => FluidModel::custom_power(
            PowerLaw::new(pressure.coef, pressure.exponent),
            PowerLaw::new(viscosity.coef, viscosity.exponent),
            m,
            length,
        ),
    }
}

fn env_f64(env: &impl Fn(&str) -> Option<String>, name: &'static str) -> CliResult<Option<f64>> {
    let Some(raw) = env(name) else { return Ok(None) };
    match raw.trim().parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(Some(v)),
        _ => Err(CliError::Env { name, message: format!("expected a positive number, got {raw:?}") }),
    }
}

fn check_count(path: String, n: usize) -> CliResult<()> {
    if n < 2 {
        return Err(CliError::config(path, format!("need at least 2 particles, got {n}")));
    }
    Ok(())
}

fn resolve(raw: RawConfig, env: impl Fn(&str) -> Option<String>) -> CliResult<SimulationConfig> {
    let model = build_model(raw.model, raw.m, raw.length).map_err(|e| CliError::config("model", e.to_string()))?;

    let rho0 = match raw.initial.rho0 {
        None => DensityProfile::Constant(model.rho_star()),
        Some(DensitySpec::Constant { value }) => DensityProfile::Constant(value),
        Some(DensitySpec::Table { x, rho }) => DensityProfile::Table { x, rho },
        Some(DensitySpec::Cosine { mean, amplitude, mode }) => DensityProfile::Cosine { mean, amplitude, mode },
    };
    let v0 = match raw.initial.v0 {
        None | Some(VelocitySpec::Zero) => VelocityProfile::Zero,
        Some(VelocitySpec::Sine { amplitude, mode }) => VelocityProfile::Sine { amplitude, mode },
        Some(VelocitySpec::Table { x, v }) => VelocityProfile::Table { x, v },
    };
    let initial = InitialData::new(rho0, v0, model.length()).map_err(|e| CliError::config("initial", e.to_string()))?;
    initial.check_against(&model).map_err(|e| CliError::config("initial.rho0", e.to_string()))?;

    let spec = raw.integrator;
    let defaults = IntegratorConfig::default();
    let mut integrator = IntegratorConfig {
        rel_tol: spec.rel_tol.unwrap_or(defaults.rel_tol),
        abs_tol: spec.abs_tol.unwrap_or(defaults.abs_tol),
        dt_init: spec.dt_init,
        dt_max: spec.dt_max.unwrap_or(defaults.dt_max),
        max_steps: spec.max_steps.unwrap_or(defaults.max_steps),
        snapshot_dt: spec.snapshot_dt.unwrap_or(defaults.snapshot_dt),
    };
    if let Some(v) = env_f64(&env, ENV_REL_TOL)? {
        integrator.rel_tol = v;
    }
    if let Some(v) = env_f64(&env, ENV_ABS_TOL)? {
        integrator.abs_tol = v;
    }
    integrator.validate().map_err(|e| CliError::config("integrator", e.to_string()))?;
    let t_final = spec.t_final.unwrap_or(DEFAULT_T_FINAL);
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(CliError::config("integrator.T", format!("must be positive and finite, got {t_final}")));
    }

    if let Some(n) = raw.n {
        check_count("n".into(), n)?;
    }
    if let Some(list) = &raw.n_list {
        if list.is_empty() {
            return Err(CliError::config("n_list", "must not be empty"));
        }
        for (k, &n) in list.iter().enumerate() {
            check_count(format!("n_list[{k}]"), n)?;
        }
        if list.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::config("n_list", "must be strictly ascending"));
        }
    }
    let grid_size = raw.grid_size.unwrap_or(DEFAULT_GRID_SIZE);
    if grid_size < 2 {
        return Err(CliError::config("grid_size", format!("need at least 2 points, got {grid_size}")));
    }

    Ok(SimulationConfig {
        model_spec: raw.model,
        model,
        initial,
        integrator,
        t_final,
        n: raw.n,
        n_list: raw.n_list,
        output: raw.output,
        grid_size,
        seed: raw.seed,
    })
}
