//! Reduction by the symmetry about the body axis.
//!
//! On a level set of the area integral `C` the decoupled `(ω, γ)` flow is
//! parameterized by `γ3`, `K1 = i3 ω3`, `K2 = (γ1 ω2 - γ2 ω1) / k` and the
//! precession angle `φ = atan2(γ2, γ1)`. The first three evolve in a closed
//! system. The chart degenerates at the poles `γ3 = ±1`, which are exactly the
//! vertical rotations; trajectories that get there must continue in the full
//! decoupled system (see [`crate::reduced_flow`]).
//!
//! Formulas here assume dimensionless parameters.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::OdeSystem;
use crate::model::BodyParams;

/// Half-width of the excluded band around `γ3 = ±1`.
pub const POLE_BAND: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedState {
    pub gamma3: f64,
    pub k1: f64,
    pub k2: f64,
    /// Area integral; a parameter of the constant-`C` flow, a variable with spinning friction.
    pub c: f64,
    #[serde(default)]
    pub phi: f64,
}

impl ReducedState {
    pub fn new(gamma3: f64, k1: f64, k2: f64, c: f64) -> Self {
        Self {
            gamma3,
            k1,
            k2,
            c,
            phi: 0.0,
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        vec![self.gamma3, self.k1, self.k2, self.c, self.phi]
    }

    pub fn from_slice(y: &[f64]) -> Self {
        Self {
            gamma3: y[0],
            k1: y[1],
            k2: y[2],
            c: y[3],
            phi: y.get(4).copied().unwrap_or(0.0),
        }
    }
}

fn check_chart(gamma3: f64) -> Result<()> {
    if !gamma3.is_finite() || gamma3.abs() >= 1.0 - POLE_BAND {
        return Err(Error::ChartSingular {
            gamma3,
            band: POLE_BAND,
        });
    }
    Ok(())
}

/// `k = sqrt((1 - γ3²) / (i1 + a² (1 - γ3²)))`.
pub fn nutation_scale(gamma3: f64, params: &BodyParams) -> f64 {
    let s = 1.0 - gamma3 * gamma3;
    (s / (params.i1 + params.a * params.a * s)).sqrt()
}

/// `k̃ = (i1 - (i1 - i3) γ3²) / i3`.
fn axial_ratio(gamma3: f64, params: &BodyParams) -> f64 {
    (params.i1 - (params.i1 - params.i3) * gamma3 * gamma3) / params.i3
}

pub fn to_reduced(
    omega: &Vector3<f64>,
    gamma: &Vector3<f64>,
    params: &BodyParams,
) -> Result<ReducedState> {
    let gamma3 = gamma.z;
    check_chart(gamma3)?;
    let k = nutation_scale(gamma3, params);
    Ok(ReducedState {
        gamma3,
        k1: params.i3 * omega.z,
        k2: (gamma.x * omega.y - gamma.y * omega.x) / k,
        c: params.inertia().component_mul(omega).dot(gamma),
        phi: gamma.y.atan2(gamma.x),
    })
}

pub fn from_reduced(
    rs: &ReducedState,
    params: &BodyParams,
) -> Result<(Vector3<f64>, Vector3<f64>)> {
    check_chart(rs.gamma3)?;
    let s = 1.0 - rs.gamma3 * rs.gamma3;
    let rho = s.sqrt();
    let (g1, g2) = (rho * rs.phi.cos(), rho * rs.phi.sin());
    let k = nutation_scale(rs.gamma3, params);
    let along = rs.c - rs.gamma3 * rs.k1;
    let across = params.i1 * k * rs.k2;
    let denom = params.i1 * s;
    let omega = Vector3::new(
        (along * g1 - across * g2) / denom,
        (along * g2 + across * g1) / denom,
        rs.k1 / params.i3,
    );
    Ok((omega, Vector3::new(g1, g2, rs.gamma3)))
}

/// `d/dt (γ3, K1, K2)` on the level set `C = rs.c`.
pub fn rhs_reduced(rs: &ReducedState, params: &BodyParams) -> Result<[f64; 3]> {
    check_chart(rs.gamma3)?;
    let ReducedState {
        gamma3, k1, k2, c, ..
    } = *rs;
    let (i1, a, mu_r) = (params.i1, params.a, params.mu_r);
    let s = 1.0 - gamma3 * gamma3;
    let k = nutation_scale(gamma3, params);
    let gamma3_dot = k * k2;
    let k1_dot = -(mu_r / i1) * (k1 * axial_ratio(gamma3, params) - gamma3 * c);
    let k2_dot =
        -k * (c - gamma3 * k1) * (c * gamma3 - k1) / (i1 * s * s) - k * a - mu_r * k2 * k * k / s;
    Ok([gamma3_dot, k1_dot, k2_dot])
}

/// Precession rate `φ̇` of `φ = atan2(γ2, γ1)` under `γ̇ = γ × ω`.
pub fn rhs_phi(rs: &ReducedState, params: &BodyParams) -> Result<f64> {
    check_chart(rs.gamma3)?;
    let s = 1.0 - rs.gamma3 * rs.gamma3;
    Ok(rs.gamma3 * (rs.c - rs.k1 * rs.gamma3) / (params.i1 * s) - rs.k1 / params.i3)
}

/// `d/dt (γ3, K1, K2, C)` with rolling and spinning resistance.
pub fn rhs_reduced_spinning(rs: &ReducedState, params: &BodyParams) -> Result<[f64; 4]> {
    let [gamma3_dot, k1_rolling, k2_dot] = rhs_reduced(rs, params)?;
    let (i1, i3) = (params.i1, params.i3);
    let spin = rs.k1 * rs.gamma3 * (i1 - i3) + rs.c * i3;
    let c_dot = -(params.mu_s / (i1 * i3)) * spin;
    Ok([gamma3_dot, k1_rolling + rs.gamma3 * c_dot, k2_dot, c_dot])
}

/// The reduced flow as an ODE on `[γ3, K1, K2, C, φ]`. With `spinning = false`
/// the area integral is held fixed.
#[derive(Debug, Clone, Copy)]
pub struct ReducedSystem {
    pub params: BodyParams,
    pub spinning: bool,
}

impl ReducedSystem {
    pub fn new(params: BodyParams) -> Self {
        Self {
            params,
            spinning: params.mu_s > 0.0,
        }
    }
}

impl OdeSystem for ReducedSystem {
    fn dim(&self) -> usize {
        5
    }

    fn rhs(&self, _t: f64, y: &[f64], dydt: &mut [f64]) -> Result<()> {
        let rs = ReducedState::from_slice(y);
        if self.spinning {
            dydt[..4].copy_from_slice(&rhs_reduced_spinning(&rs, &self.params)?);
        } else {
            dydt[..3].copy_from_slice(&rhs_reduced(&rs, &self.params)?);
            dydt[3] = 0.0;
        }
        dydt[4] = rhs_phi(&rs, &self.params)?;
        Ok(())
    }

    fn steady_norm(&self, dydt: &[f64]) -> f64 {
        crate::integrate::inf_norm(&dydt[..4])
    }
}
