//! Physical parameters, contact geometry and state containers.

use nalgebra::Vector3;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default tolerance on the geometric and contact-constraint residuals.
pub const TOL_GEOM: f64 = 1e-10;

/// Mass-geometric and friction parameters of the ball.
///
/// `i1 = i2` and `i3` are the central moments of inertia, `a` is the offset of
/// the center of mass from the geometric center along the symmetry axis.
/// `mu` is the sliding coefficient shared by the contact-force laws, `mu_r` the
/// rolling-resistance coefficient and `mu_s` the spinning-resistance one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodyParams {
    #[serde(default = "one")]
    pub m: f64,
    #[serde(default = "one")]
    pub radius: f64,
    pub a: f64,
    pub i1: f64,
    pub i3: f64,
    #[serde(default = "one")]
    pub g: f64,
    #[serde(default)]
    pub mu: f64,
    #[serde(default)]
    pub mu_r: f64,
    #[serde(default)]
    pub mu_s: f64,
    #[serde(default = "yes")]
    pub dimensionless: bool,
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

impl BodyParams {
    /// Dimensionless parameters (`m = R = g = 1`) with all friction coefficients zero.
    pub fn scaled(a: f64, i1: f64, i3: f64) -> Self {
        Self {
            m: 1.0,
            radius: 1.0,
            a,
            i1,
            i3,
            g: 1.0,
            mu: 0.0,
            mu_r: 0.0,
            mu_s: 0.0,
            dimensionless: true,
        }
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = mu;
        self
    }

    pub fn with_mu_r(mut self, mu_r: f64) -> Self {
        self.mu_r = mu_r;
        self
    }

    pub fn with_mu_s(mut self, mu_s: f64) -> Self {
        self.mu_s = mu_s;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("m", self.m),
            ("radius", self.radius),
            ("g", self.g),
            ("i1", self.i1),
            ("i3", self.i3),
        ];
        for (field, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParams {
                    field,
                    reason: format!("must be positive, got {value}"),
                });
            }
        }
        let non_negative = [
            ("a", self.a),
            ("mu", self.mu),
            ("mu_r", self.mu_r),
            ("mu_s", self.mu_s),
        ];
        for (field, value) in non_negative {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::InvalidParams {
                    field,
                    reason: format!("must be non-negative, got {value}"),
                });
            }
        }
        if self.dimensionless {
            for (field, value) in [("m", self.m), ("radius", self.radius), ("g", self.g)] {
                if value != 1.0 {
                    return Err(Error::InvalidParams {
                        field,
                        reason: format!("must be exactly 1 in dimensionless units, got {value}"),
                    });
                }
            }
        }
        Ok(())
    }

    /// Converts physical parameters to units where `m = R = g = 1`.
    ///
    /// Time is measured in `sqrt(R/g)`. Lengths scale by `R`, moments of inertia
    /// by `m R²`. `mu` is treated as a viscous coefficient (force·time/length),
    /// `mu_r` and `mu_s` as torque·time.
    pub fn nondimensionalize(&self) -> Result<Self> {
        if self.dimensionless {
            return Err(Error::AlreadyDimensionless);
        }
        self.validate()?;
        let time = (self.radius / self.g).sqrt();
        let inertia = self.m * self.radius * self.radius;
        Ok(Self {
            m: 1.0,
            radius: 1.0,
            a: self.a / self.radius,
            i1: self.i1 / inertia,
            i3: self.i3 / inertia,
            g: 1.0,
            mu: self.mu * time / self.m,
            mu_r: self.mu_r * time / inertia,
            mu_s: self.mu_s * time / inertia,
            dimensionless: true,
        })
    }

    /// Returns dimensionless parameters, converting if needed.
    pub fn to_dimensionless(&self) -> Result<Self> {
        if self.dimensionless {
            self.validate()?;
            Ok(*self)
        } else {
            self.nondimensionalize()
        }
    }

    pub fn inertia(&self) -> Vector3<f64> {
        Vector3::new(self.i1, self.i1, self.i3)
    }

    pub fn com_offset(&self) -> Vector3<f64> {
        Vector3::new(0.0, 0.0, self.a)
    }
}

/// Remaining columns of the orientation matrix and the plane position of the
/// center of mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub alpha: Vector3<f64>,
    pub beta: Vector3<f64>,
    pub x: f64,
    pub y: f64,
}

impl Pose {
    /// Completes `gamma` to a right-handed frame `{alpha, beta, gamma}`.
    pub fn aligned_with(gamma: &Vector3<f64>) -> Self {
        let g = gamma.normalize();
        let seed = if g.x.abs() < 0.9 {
            Vector3::x()
        } else {
            Vector3::y()
        };
        let alpha = (seed - g * g.dot(&seed)).normalize();
        let beta = g.cross(&alpha);
        Self {
            alpha,
            beta,
            x: 0.0,
            y: 0.0,
        }
    }
}

/// Center-of-mass velocity, angular velocity and the vertical, all in body axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FullState {
    pub v: Vector3<f64>,
    pub omega: Vector3<f64>,
    pub gamma: Vector3<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pose: Option<Pose>,
}

impl FullState {
    pub const DIM: usize = 9;
    pub const DIM_WITH_POSE: usize = 17;

    pub fn new(v: Vector3<f64>, omega: Vector3<f64>, gamma: Vector3<f64>) -> Self {
        Self {
            v,
            omega,
            gamma,
            pose: None,
        }
    }

    pub fn at_rest(gamma: Vector3<f64>) -> Self {
        Self::new(Vector3::zeros(), Vector3::zeros(), gamma)
    }

    pub fn with_pose(mut self, pose: Pose) -> Self {
        self.pose = Some(pose);
        self
    }

    /// State of the decoupled system lifted to `(v, ω, γ)`.
    ///
    /// The horizontal center-of-mass velocity is zero and the vertical part is
    /// fixed by the contact constraint.
    pub fn from_decoupled(omega: Vector3<f64>, gamma: Vector3<f64>, params: &BodyParams) -> Self {
        let r = contact_vector(&gamma, params);
        let along = -omega.dot(&r.cross(&gamma)) / gamma.norm_squared();
        Self::new(gamma * along, omega, gamma)
    }

    /// Draws `gamma` uniformly on the sphere and `omega`, `v` componentwise from
    /// `[-2, 2]`, then removes the normal part of the contact velocity.
    pub fn random_admissible<R: Rng + ?Sized>(rng: &mut R, params: &BodyParams) -> Self {
        let z: f64 = rng.gen_range(-1.0..=1.0);
        let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let rho = (1.0 - z * z).max(0.0).sqrt();
        let gamma = Vector3::new(rho * phi.cos(), rho * phi.sin(), z);
        let mut draw = || {
            Vector3::new(
                rng.gen_range(-2.0..=2.0),
                rng.gen_range(-2.0..=2.0),
                rng.gen_range(-2.0..=2.0),
            )
        };
        let omega = draw();
        let mut v = draw();
        let mut state = Self::new(v, omega, gamma);
        let normal = contact_velocity(&state, params).dot(&gamma);
        v -= gamma * normal;
        state.v = v;
        state
    }

    pub fn dim(&self) -> usize {
        if self.pose.is_some() {
            Self::DIM_WITH_POSE
        } else {
            Self::DIM
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut y = Vec::with_capacity(self.dim());
        y.extend_from_slice(self.v.as_slice());
        y.extend_from_slice(self.omega.as_slice());
        y.extend_from_slice(self.gamma.as_slice());
        if let Some(p) = &self.pose {
            y.extend_from_slice(p.alpha.as_slice());
            y.extend_from_slice(p.beta.as_slice());
            y.push(p.x);
            y.push(p.y);
        }
        y
    }

    /// Inverse of [`FullState::to_vec`]; a 17-element slice carries the pose.
    pub fn from_slice(y: &[f64]) -> Self {
        let v3 = |i: usize| Vector3::new(y[i], y[i + 1], y[i + 2]);
        let pose = (y.len() >= Self::DIM_WITH_POSE).then(|| Pose {
            alpha: v3(9),
            beta: v3(12),
            x: y[15],
            y: y[16],
        });
        Self {
            v: v3(0),
            omega: v3(3),
            gamma: v3(6),
            pose,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_vec().iter().all(|x| x.is_finite())
    }

    /// Checks the constraint, normalization and (if present) frame orthonormality.
    pub fn check(&self, params: &BodyParams, tol: f64) -> Result<()> {
        let (contact, norm) = constraint_residuals(self, params);
        if contact.abs() > tol {
            return Err(Error::InvalidParams {
                field: "v",
                reason: format!("contact constraint residual {contact:e} exceeds {tol:e}"),
            });
        }
        if norm.abs() > tol {
            return Err(Error::InvalidParams {
                field: "gamma",
                reason: format!("|gamma|^2 - 1 = {norm:e} exceeds {tol:e}"),
            });
        }
        if let Some(p) = &self.pose {
            let frame = [p.alpha, p.beta, self.gamma];
            for i in 0..3 {
                for j in i..3 {
                    let expected = if i == j { 1.0 } else { 0.0 };
                    let err = (frame[i].dot(&frame[j]) - expected).abs();
                    if err > tol {
                        return Err(Error::InvalidParams {
                            field: "pose",
                            reason: format!("frame not orthonormal (error {err:e})"),
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Radius vector of the contact point from the center of mass, `r = -R γ - a e3`.
pub fn contact_vector(gamma: &Vector3<f64>, params: &BodyParams) -> Vector3<f64> {
    -gamma * params.radius - params.com_offset()
}

/// Velocity of the material point of the ball at the contact, `v + ω × r`.
pub fn contact_velocity(state: &FullState, params: &BodyParams) -> Vector3<f64> {
    state.v + state.omega.cross(&contact_vector(&state.gamma, params))
}

/// Returns `((v_p, γ), γ·γ - 1)`.
pub fn constraint_residuals(state: &FullState, params: &BodyParams) -> (f64, f64) {
    (
        contact_velocity(state, params).dot(&state.gamma),
        state.gamma.norm_squared() - 1.0,
    )
}
