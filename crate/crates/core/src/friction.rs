//! Resistance laws producing the contact force `F` and the resistance torque
//! `M_f` (both in body axes, torque about the center of mass).

use std::fmt;

use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{contact_vector, contact_velocity, BodyParams, FullState};

/// Default regularization of the dry-friction direction `v_p / max(|v_p|, ε)`.
pub const DRY_EPSILON: f64 = 1e-6;

/// Seed of the sampler used by [`conservation_signature`].
pub const SIGNATURE_SEED: u64 = 0x5EED;

/// Threshold below which a Proposition condition is considered to vanish.
pub const SIGNATURE_TOL: f64 = 1e-12;

fn dry_epsilon() -> f64 {
    DRY_EPSILON
}

/// A resistance law. Coefficients are read from [`BodyParams`]: `mu` for the
/// contact-force laws and the anisotropic torque, `mu_r` and `mu_s` for the
/// rolling and spinning torques.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum FrictionModel {
    /// `F = 0`, `M_f = 0`.
    Smooth,
    /// `F = -mu v_p`, `M_f = r × F`.
    ViscousSliding,
    /// `F = -mu N v_p / |v_p|`, `M_f = r × F`.
    DrySliding {
        #[serde(default = "dry_epsilon")]
        epsilon: f64,
    },
    /// `F = -mu ω × r`, `M_f = -mu r × (ω × r)`.
    ContactTorque,
    /// `F = 0`, `M_f = -mu e3 × (ω × e3)`.
    AnisotropicAxis,
    /// `F = 0`, `M_f = -mu_r ω_⊥`.
    RollingResistance,
    /// `F = 0`, `M_f = -mu_s (ω, γ) γ`.
    SpinningResistance,
    /// Sum of the component laws.
    Composite { models: Vec<FrictionModel> },
}

impl FrictionModel {
    pub fn dry() -> Self {
        Self::DrySliding {
            epsilon: DRY_EPSILON,
        }
    }

    /// Every variant once, with the composite of rolling and spinning resistance.
    pub fn catalog() -> Vec<Self> {
        vec![
            Self::Smooth,
            Self::ViscousSliding,
            Self::dry(),
            Self::ContactTorque,
            Self::AnisotropicAxis,
            Self::RollingResistance,
            Self::SpinningResistance,
            Self::Composite {
                models: vec![Self::RollingResistance, Self::SpinningResistance],
            },
        ]
    }

    pub fn name(&self) -> String {
        match self {
            Self::Smooth => "smooth".into(),
            Self::ViscousSliding => "viscous_sliding".into(),
            Self::DrySliding { .. } => "dry_sliding".into(),
            Self::ContactTorque => "contact_torque".into(),
            Self::AnisotropicAxis => "anisotropic_axis".into(),
            Self::RollingResistance => "rolling_resistance".into(),
            Self::SpinningResistance => "spinning_resistance".into(),
            Self::Composite { models } => {
                let parts: Vec<_> = models.iter().map(|m| m.name()).collect();
                format!("composite({})", parts.join("+"))
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::DrySliding { epsilon } if !(epsilon.is_finite() && *epsilon > 0.0) => {
                Err(Error::InvalidParams {
                    field: "epsilon",
                    reason: format!("must be positive, got {epsilon}"),
                })
            }
            Self::Composite { models } if models.is_empty() => Err(Error::InvalidParams {
                field: "models",
                reason: "composite needs at least one sub-model".into(),
            }),
            Self::Composite { models } => models.iter().try_for_each(Self::validate),
            _ => Ok(()),
        }
    }

    pub fn needs_normal_force(&self) -> bool {
        match self {
            Self::DrySliding { .. } => true,
            Self::Composite { models } => models.iter().any(Self::needs_normal_force),
            _ => false,
        }
    }

    /// True when the law has no sliding force and no torque about the vertical,
    /// so that the `(ω, γ)` equations decouple with only `mu_r` (and `mu_s`).
    pub fn is_decoupled_family(&self) -> bool {
        match self {
            Self::Smooth | Self::RollingResistance | Self::SpinningResistance => true,
            Self::Composite { models } => models.iter().all(Self::is_decoupled_family),
            _ => false,
        }
    }

    /// Parameters of the equivalent decoupled system: `mu_r` and `mu_s` are
    /// kept only when the law contains the corresponding torque.
    pub fn decoupled_params(&self, params: &BodyParams) -> Option<BodyParams> {
        if !self.is_decoupled_family() {
            return None;
        }
        let mut p = *params;
        if !self.contains(&Self::RollingResistance) {
            p.mu_r = 0.0;
        }
        if !self.contains(&Self::SpinningResistance) {
            p.mu_s = 0.0;
        }
        Some(p)
    }

    fn contains(&self, leaf: &Self) -> bool {
        match self {
            Self::Composite { models } => models.iter().any(|m| m.contains(leaf)),
            other => other == leaf,
        }
    }

    /// Integrals predicted analytically: `(M_f, r) = 0` gives Jellett,
    /// `(M_f, e3) = 0` Lagrange and `(M_f, γ) = 0` the area integral.
    pub fn predicted_integrals(&self) -> IntegralSet {
        let set = match self {
            Self::Smooth => IntegralSet::ALL,
            Self::ViscousSliding | Self::DrySliding { .. } | Self::ContactTorque => {
                IntegralSet::JELLETT
            }
            Self::AnisotropicAxis => IntegralSet::LAGRANGE,
            Self::RollingResistance => IntegralSet::AREA,
            Self::SpinningResistance => IntegralSet::NONE,
            Self::Composite { models } => models
                .iter()
                .map(Self::predicted_integrals)
                .fold(IntegralSet::ALL, IntegralSet::intersection),
        };
        set.closure()
    }

    /// Splits the law into a part independent of the normal force and a part
    /// proportional to it: `F = F0 + N F1`, `M_f = M0 + N M1`.
    pub(crate) fn split(
        &self,
        state: &FullState,
        params: &BodyParams,
    ) -> (FrictionOutput, FrictionOutput) {
        let zero = FrictionOutput::zero();
        let r = contact_vector(&state.gamma, params);
        let omega = state.omega;
        let gamma = state.gamma;
        match self {
            Self::Smooth => (zero, zero),
            Self::ViscousSliding => {
                let force = -contact_velocity(state, params) * params.mu;
                (FrictionOutput::new(force, r.cross(&force)), zero)
            }
            Self::DrySliding { epsilon } => {
                let vp = contact_velocity(state, params);
                let force = -vp * (params.mu / vp.norm().max(*epsilon));
                let mut per_unit = FrictionOutput::new(force, r.cross(&force));
                per_unit.needs_normal_force = true;
                (zero, per_unit)
            }
            Self::ContactTorque => {
                let spin = omega.cross(&r);
                let force = -spin * params.mu;
                (
                    FrictionOutput::new(force, -r.cross(&spin) * params.mu),
                    zero,
                )
            }
            Self::AnisotropicAxis => {
                let e3 = Vector3::z();
                let torque = -e3.cross(&omega.cross(&e3)) * params.mu;
                (FrictionOutput::new(Vector3::zeros(), torque), zero)
            }
            Self::RollingResistance => {
                let horizontal = omega - gamma * omega.dot(&gamma);
                (
                    FrictionOutput::new(Vector3::zeros(), -horizontal * params.mu_r),
                    zero,
                )
            }
            Self::SpinningResistance => {
                let torque = -gamma * (params.mu_s * omega.dot(&gamma));
                (FrictionOutput::new(Vector3::zeros(), torque), zero)
            }
            Self::Composite { models } => models.iter().fold((zero, zero), |(b, n), m| {
                let (mb, mn) = m.split(state, params);
                (b + mb, n + mn)
            }),
        }
    }
}

impl fmt::Display for FrictionModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Contact force and resistance torque, body axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrictionOutput {
    pub force: Vector3<f64>,
    pub torque: Vector3<f64>,
    pub needs_normal_force: bool,
}

impl FrictionOutput {
    pub fn new(force: Vector3<f64>, torque: Vector3<f64>) -> Self {
        Self {
            force,
            torque,
            needs_normal_force: false,
        }
    }

    pub fn zero() -> Self {
        Self::new(Vector3::zeros(), Vector3::zeros())
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            force: self.force * k,
            torque: self.torque * k,
            needs_normal_force: self.needs_normal_force,
        }
    }
}

impl std::ops::Add for FrictionOutput {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self {
            force: self.force + rhs.force,
            torque: self.torque + rhs.torque,
            needs_normal_force: self.needs_normal_force || rhs.needs_normal_force,
        }
    }
}

/// Evaluates `(F, M_f)`. `normal` is required when the law contains dry sliding.
pub fn eval_friction(
    model: &FrictionModel,
    state: &FullState,
    normal: Option<f64>,
    params: &BodyParams,
) -> Result<FrictionOutput> {
    let (base, per_unit) = model.split(state, params);
    if !per_unit.needs_normal_force {
        return Ok(base);
    }
    let n = normal.ok_or(Error::MissingNormalForce)?;
    if n < 0.0 {
        return Err(Error::NegativeNormalForce(n));
    }
    let mut out = base + per_unit.scaled(n);
    out.needs_normal_force = true;
    Ok(out)
}

/// One of the integrals linear in `ω`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integral {
    Jellett,
    Lagrange,
    Area,
}

impl Integral {
    pub const ALL: [Integral; 3] = [Integral::Jellett, Integral::Lagrange, Integral::Area];
}

impl fmt::Display for Integral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Integral::Jellett => "jellett",
            Integral::Lagrange => "lagrange",
            Integral::Area => "area",
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegralSet {
    pub jellett: bool,
    pub lagrange: bool,
    pub area: bool,
}

impl IntegralSet {
    pub const NONE: Self = Self {
        jellett: false,
        lagrange: false,
        area: false,
    };
    pub const ALL: Self = Self {
        jellett: true,
        lagrange: true,
        area: true,
    };
    pub const JELLETT: Self = Self {
        jellett: true,
        ..Self::NONE
    };
    pub const LAGRANGE: Self = Self {
        lagrange: true,
        ..Self::NONE
    };
    pub const AREA: Self = Self {
        area: true,
        ..Self::NONE
    };

    pub fn contains(&self, integral: Integral) -> bool {
        match integral {
            Integral::Jellett => self.jellett,
            Integral::Lagrange => self.lagrange,
            Integral::Area => self.area,
        }
    }

    pub fn intersection(self, other: Self) -> Self {
        Self {
            jellett: self.jellett && other.jellett,
            lagrange: self.lagrange && other.lagrange,
            area: self.area && other.area,
        }
    }

    pub fn len(&self) -> usize {
        Integral::ALL.iter().filter(|i| self.contains(**i)).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Any two of the three conditions imply the third, since `r = -R γ - a e3`.
    pub fn closure(self) -> Self {
        if self.len() >= 2 {
            Self::ALL
        } else {
            self
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = Integral> + '_ {
        Integral::ALL.into_iter().filter(|i| self.contains(*i))
    }
}

impl fmt::Display for IntegralSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.iter().map(|i| i.to_string()).collect();
        write!(f, "{{{}}}", names.join(", "))
    }
}

/// Tests the three torque conditions on `sample_count` pseudo-random
/// admissible states and reports the integrals whose condition vanishes on
/// all of them.
pub fn conservation_signature(
    model: &FrictionModel,
    params: &BodyParams,
    sample_count: usize,
) -> IntegralSet {
    let mut rng = ChaCha8Rng::seed_from_u64(SIGNATURE_SEED);
    let mut set = IntegralSet::ALL;
    for _ in 0..sample_count.max(1) {
        let state = FullState::random_admissible(&mut rng, params);
        let out =
            eval_friction(model, &state, Some(1.0), params).expect("unit normal force is valid");
        let m = out.torque;
        let r = contact_vector(&state.gamma, params);
        let scale = 1.0 + m.norm();
        set.jellett &= m.dot(&r).abs() <= SIGNATURE_TOL * scale * (1.0 + r.norm());
        set.lagrange &= m.z.abs() <= SIGNATURE_TOL * scale;
        set.area &= m.dot(&state.gamma).abs() <= SIGNATURE_TOL * scale;
    }
    set.closure()
}
