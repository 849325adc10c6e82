//! Scenario files: JSON documents describing parameters, friction law,
//! initial condition, integrator settings and command-specific grids.

use std::path::Path;

use serde::{Deserialize, Serialize};
use tippe_core::{BodyParams, FrictionModel, FullState, IntegratorConfig, ReducedState, Vector3};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub params: BodyParams,
    #[serde(default = "default_model")]
    pub model: FrictionModel,
    #[serde(default)]
    pub initial: Option<Initial>,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub scan: Option<ScanConfig>,
    #[serde(default)]
    pub smale: Option<SmaleConfig>,
    #[serde(default)]
    pub portrait: Option<PortraitConfig>,
    #[serde(default)]
    pub conservation: Option<ConservationConfig>,
    #[serde(default)]
    pub outputs: OutputConfig,
}

fn default_model() -> FrictionModel {
    FrictionModel::RollingResistance
}

/// Exactly one of a full state or a chart state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Initial {
    Full {
        /// Omitted: `v = -(ω, r×γ)γ`, zero horizontal velocity on the constraint.
        #[serde(default)]
        v: Option<[f64; 3]>,
        omega: [f64; 3],
        gamma: [f64; 3],
    },
    Reduced {
        gamma3: f64,
        k1: f64,
        k2: f64,
        c: f64,
        #[serde(default)]
        phi: f64,
    },
}

/// Either explicit values or `count` evenly spaced points on `[start, stop]`.
/// With `relative = true` the bounds are multiples of `C*` (or `c0` for `c1` grids).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Values(Vec<f64>),
    Range {
        start: f64,
        stop: f64,
        count: usize,
        #[serde(default)]
        relative: bool,
    },
}

impl Grid {
    pub fn points(&self, unit: Option<f64>) -> Result<Vec<f64>, CliError> {
        match self {
            Grid::Values(v) => Ok(v.clone()),
            Grid::Range {
                start,
                stop,
                count,
                relative,
            } => {
                let scale = if *relative {
                    unit.ok_or_else(|| {
                        CliError::Validation(
                            "relative grid needs i1 != i3 (no critical value exists)".into(),
                        )
                    })?
                } else {
                    1.0
                };
                let pts = match count {
                    0 => Vec::new(),
                    1 => vec![*start],
                    n => (0..*n)
                        .map(|k| start + (stop - start) * k as f64 / (*n - 1) as f64)
                        .collect(),
                };
                Ok(pts.into_iter().map(|x| x * scale).collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    /// Area-integral levels for the vertical rotations and for `σ0` through `C(c1) = C`.
    #[serde(default)]
    pub c_grid: Option<Grid>,
    /// Direct `c1` values for `σ0`; relative grids are in units of `c0`.
    #[serde(default)]
    pub c1_grid: Option<Grid>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmaleConfig {
    pub c_grid: Grid,
    /// `c1` magnitudes, relative grids in units of `c0`; both branches are emitted.
    pub c1_grid: Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortraitConfig {
    #[serde(default = "default_portrait_axis")]
    pub k1: Grid,
    #[serde(default = "default_portrait_axis")]
    pub c: Grid,
    /// Initial inclination shared by all grid points.
    #[serde(default = "default_portrait_gamma3")]
    pub gamma3: f64,
    #[serde(default)]
    pub k2: f64,
    /// `c1` magnitudes of the overlaid `σ0` curve in units of `c0`.
    #[serde(default = "default_curve")]
    pub sigma0_curve: Grid,
}

fn default_portrait_axis() -> Grid {
    Grid::Range {
        start: -3.0,
        stop: 3.0,
        count: 5,
        relative: false,
    }
}

fn default_portrait_gamma3() -> f64 {
    -0.5
}

fn default_curve() -> Grid {
    Grid::Range {
        start: 1.001,
        stop: 6.0,
        count: 200,
        relative: true,
    }
}

impl Default for PortraitConfig {
    fn default() -> Self {
        Self {
            k1: default_portrait_axis(),
            c: default_portrait_axis(),
            gamma3: default_portrait_gamma3(),
            k2: 0.0,
            sigma0_curve: default_curve(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConservationConfig {
    /// Defaults to every variant of the catalog.
    #[serde(default)]
    pub models: Option<Vec<FrictionModel>>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_signature_samples")]
    pub signature_samples: usize,
    /// Largest drift still counted as conserved.
    #[serde(default = "default_conserved")]
    pub conserved_tol: f64,
    /// Smallest drift counted as varying.
    #[serde(default = "default_varying")]
    pub varying_tol: f64,
}

fn default_samples() -> usize {
    20
}

fn default_signature_samples() -> usize {
    64
}

fn default_conserved() -> f64 {
    1e-8
}

fn default_varying() -> f64 {
    1e-3
}

impl Default for ConservationConfig {
    fn default() -> Self {
        Self {
            models: None,
            samples: default_samples(),
            signature_samples: default_signature_samples(),
            conserved_tol: default_conserved(),
            varying_tol: default_varying(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Prepended to every file name written to the output directory.
    #[serde(default)]
    pub prefix: String,
}

fn required_coefficients(model: &FrictionModel, p: &BodyParams) -> Vec<(&'static str, f64)> {
    match model {
        FrictionModel::Smooth => vec![],
        FrictionModel::RollingResistance => vec![("mu_r", p.mu_r)],
        FrictionModel::SpinningResistance => vec![("mu_s", p.mu_s)],
        FrictionModel::Composite { models } => models
            .iter()
            .flat_map(|m| required_coefficients(m, p))
            .collect(),
        _ => vec![("mu", p.mu)],
    }
}

/// Initial condition resolved against the parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Start {
    Full(FullState),
    Reduced(ReducedState),
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let mut scenario: Scenario = serde_json::from_str(text)
            .map_err(|e| CliError::Validation(format!("scenario: {e}")))?;
        scenario.params = scenario
            .params
            .to_dimensionless()
            .map_err(|e| CliError::Validation(format!("params: {e}")))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let field =
            |section: &str, e: tippe_core::Error| CliError::Validation(format!("{section}: {e}"));
        self.params.validate().map_err(|e| field("params", e))?;
        self.model.validate().map_err(|e| field("model", e))?;
        self.integrator
            .validate()
            .map_err(|e| field("integrator", e))?;
        for (name, value) in required_coefficients(&self.model, &self.params) {
            if !(value > 0.0) {
                return Err(CliError::Validation(format!(
                    "params.{name}: model `{}` needs a positive coefficient, got {value}",
                    self.model
                )));
            }
        }
        if let Some(c) = &self.conservation {
            if c.samples == 0 || c.signature_samples == 0 {
                return Err(CliError::Validation(
                    "conservation: samples must be at least 1".into(),
                ));
            }
            if let Some(models) = &c.models {
                models
                    .iter()
                    .try_for_each(|m| m.validate())
                    .map_err(|e| field("conservation.models", e))?;
            }
        }
        if let Some(Initial::Reduced { gamma3, .. }) = &self.initial {
            if !(gamma3.abs() <= 1.0) {
                return Err(CliError::Validation(format!(
                    "initial.reduced.gamma3: |gamma3| must be <= 1, got {gamma3}"
                )));
            }
            if !self.model.is_decoupled_family() {
                return Err(CliError::Validation(format!(
                    "initial.reduced: model `{}` has a sliding force; the chart needs rolling/spinning resistance",
                    self.model
                )));
            }
        }
        if let Some(Initial::Full { gamma, .. }) = &self.initial {
            let g = Vector3::from(*gamma);
            if (g.norm() - 1.0).abs() > 1e-8 {
                return Err(CliError::Validation(format!(
                    "initial.full.gamma: must be a unit vector, |gamma| = {}",
                    g.norm()
                )));
            }
        }
        Ok(())
    }

    /// Parameters used by the decoupled and reduced systems for this model.
    pub fn decoupled_params(&self) -> BodyParams {
        self.model
            .decoupled_params(&self.params)
            .unwrap_or(self.params)
    }

    pub fn start(&self) -> Result<Start, CliError> {
        match &self.initial {
            None => Err(CliError::Validation(
                "initial: missing (give `full` or `reduced`)".into(),
            )),
            Some(Initial::Reduced {
                gamma3,
                k1,
                k2,
                c,
                phi,
            }) => Ok(Start::Reduced(ReducedState {
                gamma3: *gamma3,
                k1: *k1,
                k2: *k2,
                c: *c,
                phi: *phi,
            })),
            Some(Initial::Full { v, omega, gamma }) => {
                let omega = Vector3::from(*omega);
                let gamma = Vector3::from(*gamma);
                let state = match v {
                    None => FullState::from_decoupled(omega, gamma, &self.params),
                    Some(v) => FullState::new(Vector3::from(*v), omega, gamma),
                };
                state
                    .check(&self.params, 1e-8)
                    .map_err(|e| CliError::Validation(format!("initial.full: {e}")))?;
                Ok(Start::Full(state))
            }
        }
    }
}
