//! Scenario configuration: one JSON object, parsed strictly, defaults filled.

use std::fmt;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use doiflow_core::flow::hastings::DEFAULT_U_NODES;
use doiflow_core::flow::patch::DEFAULT_CONTOUR_NODES;
use doiflow_core::flow::weight::{DEFAULT_FOURIER_NODES, DEFAULT_SHARPNESS, DEFAULT_T_MAX_FACTOR, DEFAULT_T_PANEL_ORDER};
use doiflow_core::flow::{HastingsMethod, WeightFunctionSettings};

pub const DEFAULT_STEPS: usize = 1000;
pub const SEED_ENV: &str = "DOIFLOW_SEED";

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("config syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("config field `{field}`: {message}")]
    Field { field: String, message: String },
}

impl ConfigError {
    fn field(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Field { field: field.into(), message: message.into() }
    }

    /// The offending field, for semantic errors.
    pub fn field_name(&self) -> Option<&str> {
        match self {
            ConfigError::Field { field, .. } => Some(field),
            ConfigError::Syntax { .. } => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Doi,
    Dk,
    Flow,
    Weightfn,
    Verify,
}

impl Command {
    pub fn parse(name: &str) -> Option<Command> {
        match name {
            "doi" => Some(Command::Doi),
            "dk" => Some(Command::Dk),
            "flow" => Some(Command::Flow),
            "weightfn" => Some(Command::Weightfn),
            "verify" => Some(Command::Verify),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Command::Doi => "doi",
            Command::Dk => "dk",
            Command::Flow => "flow",
            Command::Weightfn => "weightfn",
            Command::Verify => "verify",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoLevelParams {
    #[serde(default = "one")]
    pub kappa: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomGappedParams {
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default = "two")]
    pub gap: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TfimParams {
    #[serde(default = "default_sites")]
    pub sites: usize,
}

fn one() -> f64 {
    1.0
}
fn two() -> f64 {
    2.0
}
fn default_dim() -> usize {
    8
}
fn default_epsilon() -> f64 {
    0.5
}
fn default_sites() -> usize {
    6
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "name", content = "params", rename_all = "snake_case")]
pub enum ModelConfig {
    TwoLevel(TwoLevelParams),
    RandomGapped(RandomGappedParams),
    Tfim(TfimParams),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SGrid {
    pub start: f64,
    pub end: f64,
    pub steps: usize,
    /// Flow rows are written every `stride` steps and at the end.
    pub stride: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightFnConfig {
    pub fourier_nodes: usize,
    pub t_max_factor: f64,
    pub sharpness: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorMethod {
    ClosedForm,
    Nested,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuadratureConfig {
    /// Gauss–Legendre nodes per `t`-panel of the weight function.
    pub t_nodes: usize,
    /// Gauss–Legendre nodes per gap of the nested `u`-integral.
    pub u_nodes: usize,
    pub contour_nodes: usize,
    pub method: GeneratorMethod,
}

/// The effective configuration, echoed into every report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub command: Command,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    pub s_grid: SGrid,
    pub weight_fn: WeightFnConfig,
    pub quadrature: QuadratureConfig,
    pub seed: u64,
    #[serde(skip_serializing)]
    pub output: Option<String>,
}

impl ScenarioConfig {
    pub fn weight_settings(&self) -> WeightFunctionSettings {
        WeightFunctionSettings {
            sharpness: self.weight_fn.sharpness,
            fourier_nodes: self.weight_fn.fourier_nodes,
            t_max_factor: self.weight_fn.t_max_factor,
            t_panel_order: self.quadrature.t_nodes,
        }
    }

    pub fn hastings_method(&self) -> HastingsMethod {
        match self.quadrature.method {
            GeneratorMethod::ClosedForm => HastingsMethod::ClosedForm,
            GeneratorMethod::Nested => HastingsMethod::Quadrature { u_nodes: self.quadrature.u_nodes },
        }
    }

    /// Single-line JSON echo.
    pub fn echo(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// Replaces the seed with `DOIFLOW_SEED` when that is set.
    pub fn apply_seed_env(&mut self) -> Result<(), ConfigError> {
        if let Ok(text) = std::env::var(SEED_ENV) {
            self.seed = text
                .trim()
                .parse()
                .map_err(|_| ConfigError::field("seed", format!("{SEED_ENV}={text:?} is not an unsigned 64-bit integer")))?;
        }
        Ok(())
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    command: String,
    model: Option<RawModel>,
    gamma: Option<f64>,
    s_grid: Option<RawGrid>,
    weight_fn: Option<RawWeight>,
    quadrature: Option<RawQuadrature>,
    seed: Option<u64>,
    output: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    name: String,
    #[serde(default)]
    params: Map<String, Value>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    start: Option<f64>,
    end: Option<f64>,
    steps: Option<usize>,
    stride: Option<usize>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawWeight {
    fourier_nodes: Option<usize>,
    t_max_factor: Option<f64>,
    sharpness: Option<f64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawQuadrature {
    t_nodes: Option<usize>,
    u_nodes: Option<usize>,
    contour_nodes: Option<usize>,
    method: Option<String>,
}

fn params<T: DeserializeOwned>(map: Map<String, Value>) -> Result<T, ConfigError> {
    serde_json::from_value(Value::Object(map)).map_err(|e| ConfigError::field("model.params", e.to_string()))
}

fn positive(field: &str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(ConfigError::field(field, format!("must be a positive number, got {v}")))
    }
}

fn at_least(field: &str, v: usize, min: usize) -> Result<usize, ConfigError> {
    if v >= min {
        Ok(v)
    } else {
        Err(ConfigError::field(field, format!("must be at least {min}, got {v}")))
    }
}

fn model(raw: RawModel) -> Result<ModelConfig, ConfigError> {
    let m = match raw.name.as_str() {
        "two_level" => {
            let p: TwoLevelParams = params(raw.params)?;
            if !p.kappa.is_finite() {
                return Err(ConfigError::field("model.params.kappa", "must be finite"));
            }
            ModelConfig::TwoLevel(p)
        }
        "random_gapped" => {
            let p: RandomGappedParams = params(raw.params)?;
            at_least("model.params.dim", p.dim, 2)?;
            if p.dim > 64 {
                return Err(ConfigError::field("model.params.dim", format!("at most 64, got {}", p.dim)));
            }
            positive("model.params.gap", p.gap)?;
            if !(p.epsilon.is_finite() && p.epsilon >= 0.0) {
                return Err(ConfigError::field("model.params.epsilon", "must be a non-negative number"));
            }
            ModelConfig::RandomGapped(p)
        }
        "tfim" => {
            let p: TfimParams = params(raw.params)?;
            if !(2..=8).contains(&p.sites) {
                return Err(ConfigError::field("model.params.sites", format!("must lie in 2..=8, got {}", p.sites)));
            }
            ModelConfig::Tfim(p)
        }
        other => {
            return Err(ConfigError::field("model.name", format!("unknown model {other:?}; expected two_level, random_gapped or tfim")))
        }
    };
    Ok(m)
}

pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let raw: RawConfig = serde_json::from_str(text)
        .map_err(|e| ConfigError::Syntax { line: e.line(), column: e.column(), message: e.to_string() })?;

    let command = Command::parse(&raw.command)
        .ok_or_else(|| ConfigError::field("command", format!("unknown command {:?}", raw.command)))?;
    let model = raw.model.map(model).transpose()?;
    if model.is_none() && matches!(command, Command::Doi | Command::Dk | Command::Flow) {
        return Err(ConfigError::field("model", format!("required by the {command} command")));
    }
    let gamma = raw.gamma.map(|g| positive("gamma", g)).transpose()?;
    if command == Command::Weightfn && gamma.is_none() && model.is_none() {
        return Err(ConfigError::field("gamma", "weightfn needs gamma or a model"));
    }

    let g = raw.s_grid.unwrap_or_default();
    let s_grid = SGrid {
        start: g.start.unwrap_or(0.0),
        end: g.end.unwrap_or(1.0),
        steps: at_least("s_grid.steps", g.steps.unwrap_or(DEFAULT_STEPS), 1)?,
        stride: at_least("s_grid.stride", g.stride.unwrap_or(1), 1)?,
    };
    if !(s_grid.start.is_finite() && s_grid.end.is_finite() && s_grid.start < s_grid.end) {
        return Err(ConfigError::field("s_grid.end", format!("need start < end, got [{}, {}]", s_grid.start, s_grid.end)));
    }
    if let Some(ModelConfig::RandomGapped(p)) = &model {
        let reach = s_grid.start.abs().max(s_grid.end.abs());
        if p.epsilon * reach > 0.25 * p.gap {
            return Err(ConfigError::field(
                "model.params.epsilon",
                format!("epsilon·max|s| = {} exceeds gap/4 = {}", p.epsilon * reach, 0.25 * p.gap),
            ));
        }
    }

    let w = raw.weight_fn.unwrap_or_default();
    let weight_fn = WeightFnConfig {
        fourier_nodes: at_least("weight_fn.fourier_nodes", w.fourier_nodes.unwrap_or(DEFAULT_FOURIER_NODES), 2)?,
        t_max_factor: positive("weight_fn.t_max_factor", w.t_max_factor.unwrap_or(DEFAULT_T_MAX_FACTOR))?,
        sharpness: positive("weight_fn.sharpness", w.sharpness.unwrap_or(DEFAULT_SHARPNESS))?,
    };

    let q = raw.quadrature.unwrap_or_default();
    let method = match q.method.as_deref() {
        None | Some("closed_form") => GeneratorMethod::ClosedForm,
        Some("nested") => GeneratorMethod::Nested,
        Some(other) => {
            return Err(ConfigError::field("quadrature.method", format!("unknown method {other:?}; expected closed_form or nested")))
        }
    };
    let contour_nodes = at_least("quadrature.contour_nodes", q.contour_nodes.unwrap_or(DEFAULT_CONTOUR_NODES), 4)?;
    if contour_nodes % 2 != 0 {
        return Err(ConfigError::field("quadrature.contour_nodes", format!("must be even, got {contour_nodes}")));
    }
    let quadrature = QuadratureConfig {
        t_nodes: at_least("quadrature.t_nodes", q.t_nodes.unwrap_or(DEFAULT_T_PANEL_ORDER), 2)?,
        u_nodes: at_least("quadrature.u_nodes", q.u_nodes.unwrap_or(DEFAULT_U_NODES), 2)?,
        contour_nodes,
        method,
    };

    Ok(ScenarioConfig {
        command,
        model,
        gamma,
        s_grid,
        weight_fn,
        quadrature,
        seed: raw.seed.unwrap_or(0),
        output: raw.output,
    })
}
