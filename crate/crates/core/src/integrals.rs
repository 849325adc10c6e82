//! Energy, the three integrals linear in `ω`, and the dissipation rate.

use serde::{Deserialize, Serialize};

use crate::dynamics::{resolved_friction, MassOperator};
use crate::equilibria::{sigma0_family, FamilyKind};
use crate::error::Result;
use crate::friction::{FrictionModel, FrictionOutput, Integral};
use crate::model::{constraint_residuals, contact_vector, BodyParams, FullState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralValues {
    pub energy: f64,
    /// `F = i3 ω3`.
    pub lagrange: f64,
    /// `G = -(J ω, r)`.
    pub jellett: f64,
    /// `C = (J ω, γ)`.
    pub area: f64,
    /// `dE/dt = (F, v) + (M_f, ω)`.
    pub dissipation: f64,
}

impl IntegralValues {
    pub fn from_friction(
        state: &FullState,
        friction: &FrictionOutput,
        params: &BodyParams,
    ) -> Self {
        let (v, omega, gamma) = (state.v, state.omega, state.gamma);
        let iw = params.inertia().component_mul(&omega);
        let jw = MassOperator::at(&gamma, params).matrix * omega;
        let r = contact_vector(&gamma, params);
        Self {
            energy: 0.5 * omega.dot(&iw)
                + 0.5 * params.m * v.norm_squared()
                + params.m * params.g * params.a * gamma.z,
            lagrange: params.i3 * omega.z,
            jellett: -jw.dot(&r),
            area: jw.dot(&gamma),
            dissipation: friction.force.dot(&v) + friction.torque.dot(&omega),
        }
    }

    pub fn get(&self, integral: Integral) -> f64 {
        match integral {
            Integral::Jellett => self.jellett,
            Integral::Lagrange => self.lagrange,
            Integral::Area => self.area,
        }
    }
}

pub fn evaluate_integrals(
    state: &FullState,
    model: &FrictionModel,
    params: &BodyParams,
) -> Result<IntegralValues> {
    let friction = resolved_friction(state, model, params)?;
    Ok(IntegralValues::from_friction(state, &friction, params))
}

/// One row of trajectory diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRecord {
    pub t: f64,
    pub energy: f64,
    pub lagrange: f64,
    pub jellett: f64,
    pub area: f64,
    pub dissipation: f64,
    pub res_constraint: f64,
    pub res_norm: f64,
}

impl DiagnosticRecord {
    pub fn new(t: f64, state: &FullState, friction: &FrictionOutput, params: &BodyParams) -> Self {
        let iv = IntegralValues::from_friction(state, friction, params);
        let (res_constraint, res_norm) = constraint_residuals(state, params);
        Self {
            t,
            energy: iv.energy,
            lagrange: iv.lagrange,
            jellett: iv.jellett,
            area: iv.area,
            dissipation: iv.dissipation,
            res_constraint,
            res_norm,
        }
    }

    pub fn is_finite(&self) -> bool {
        [
            self.t,
            self.energy,
            self.lagrange,
            self.jellett,
            self.area,
            self.dissipation,
            self.res_constraint,
            self.res_norm,
        ]
        .iter()
        .all(|x| x.is_finite())
    }
}

/// Energy of a steady motion. `parameter` is the area integral `C` for the
/// vertical families and `c1` for `σ0`. The center of mass has zero velocity.
pub fn family_energy(family: FamilyKind, parameter: f64, params: &BodyParams) -> Result<f64> {
    let potential = params.m * params.g * params.a;
    match family {
        FamilyKind::Upper => Ok(parameter * parameter / (2.0 * params.i3) + potential),
        FamilyKind::Lower => Ok(parameter * parameter / (2.0 * params.i3) - potential),
        FamilyKind::Permanent => {
            let fam = sigma0_family(parameter, params)?;
            let gamma3 = fam.gamma3;
            let k1 = fam.k1;
            Ok(
                0.5 * params.i1 * parameter * parameter * (1.0 - gamma3 * gamma3)
                    + k1 * k1 / (2.0 * params.i3)
                    + potential * gamma3,
            )
        }
    }
}
