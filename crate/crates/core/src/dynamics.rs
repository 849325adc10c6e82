//! Right-hand sides of the equations of motion.
//!
//! [`rhs_general`] solves the Newton–Euler equations together with the second
//! time derivative of the contact constraint for `(v̇, ω̇, N)`. This handles
//! friction laws that depend on the normal force without iteration.
//! [`rhs_decoupled`] is the closed `(ω, γ)` system obtained when `F = 0` and the
//! torque is built from `ω` and `γ` only (rolling and spinning resistance).

use nalgebra::{Matrix3, SMatrix, SVector, Vector3};

use crate::error::{Error, Result};
use crate::friction::{eval_friction, FrictionModel, FrictionOutput};
use crate::integrate::OdeSystem;
use crate::model::{contact_vector, BodyParams, FullState, Pose};

/// `J = I + m (r × γ) ⊗ (r × γ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassOperator {
    pub matrix: Matrix3<f64>,
    pub lever: Vector3<f64>,
}

impl MassOperator {
    pub fn at(gamma: &Vector3<f64>, params: &BodyParams) -> Self {
        let lever = contact_vector(gamma, params).cross(gamma);
        let inertia = Matrix3::from_diagonal(&params.inertia());
        Self {
            matrix: inertia + lever * lever.transpose() * params.m,
            lever,
        }
    }

    pub fn solve(&self, rhs: &Vector3<f64>) -> Result<Vector3<f64>> {
        self.matrix
            .cholesky()
            .map(|c| c.solve(rhs))
            .ok_or(Error::SingularSystem("mass operator"))
    }
}

/// Time derivative of `(r × γ)` given `γ̇`.
fn lever_rate(gamma: &Vector3<f64>, gamma_dot: &Vector3<f64>, params: &BodyParams) -> Vector3<f64> {
    let r = contact_vector(gamma, params);
    let r_dot = -gamma_dot * params.radius;
    r_dot.cross(gamma) + r.cross(gamma_dot)
}

/// Time derivatives of a [`FullState`] plus the quantities resolved on the way.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivative {
    pub v_dot: Vector3<f64>,
    pub omega_dot: Vector3<f64>,
    pub gamma_dot: Vector3<f64>,
    pub pose_dot: Option<Pose>,
    pub normal_force: f64,
    pub friction: FrictionOutput,
}

impl Derivative {
    pub fn write(&self, out: &mut [f64]) {
        out[0..3].copy_from_slice(self.v_dot.as_slice());
        out[3..6].copy_from_slice(self.omega_dot.as_slice());
        out[6..9].copy_from_slice(self.gamma_dot.as_slice());
        if let (Some(p), true) = (&self.pose_dot, out.len() >= FullState::DIM_WITH_POSE) {
            out[9..12].copy_from_slice(p.alpha.as_slice());
            out[12..15].copy_from_slice(p.beta.as_slice());
            out[15] = p.x;
            out[16] = p.y;
        }
    }
}

/// Normal reaction for a given friction output, `N = m (v, γ)˙ - (F, γ) + m g`,
/// with `(v, γ)˙ = -(ω, r × γ)˙` and `ω̇` taken from the angular momentum
/// equation. A negative value means the ball would leave the plane.
pub fn normal_force(
    state: &FullState,
    friction: &FrictionOutput,
    params: &BodyParams,
) -> Result<f64> {
    let (omega, gamma) = (state.omega, state.gamma);
    let inertia = params.inertia();
    let mass = MassOperator::at(&gamma, params);
    let gamma_dot = gamma.cross(&omega);
    let lever_dot = lever_rate(&gamma, &gamma_dot, params);
    let r = contact_vector(&gamma, params);
    let vertical_force = friction.force.dot(&gamma);
    let rhs = friction.torque
        - r.cross(&(gamma * vertical_force))
        - omega.cross(&inertia.component_mul(&omega))
        - mass.lever * (params.m * (omega.dot(&lever_dot) - params.g));
    let omega_dot = mass.solve(&rhs)?;
    let lever_rate_of_omega = omega_dot.dot(&mass.lever) + omega.dot(&lever_dot);
    Ok(-params.m * lever_rate_of_omega - vertical_force + params.m * params.g)
}

/// Derivatives of `(v, ω, γ)` (and the pose, when present) under `model`.
pub fn rhs_general(
    state: &FullState,
    model: &FrictionModel,
    params: &BodyParams,
) -> Result<Derivative> {
    let (v, omega, gamma) = (state.v, state.omega, state.gamma);
    let m = params.m;
    let inertia = params.inertia();
    let (base, per_unit) = model.split(state, params);

    let r = contact_vector(&gamma, params);
    let lever = r.cross(&gamma);
    let gamma_dot = gamma.cross(&omega);
    let lever_dot = lever_rate(&gamma, &gamma_dot, params);

    // unknowns: v̇ (0..3), ω̇ (3..6), N (6)
    let mut a = SMatrix::<f64, 7, 7>::zeros();
    let mut b = SVector::<f64, 7>::zeros();
    let force_dir = gamma + per_unit.force;
    let torque_dir = lever + per_unit.torque;
    let linear_rhs = base.force - gamma * (m * params.g) - omega.cross(&v) * m;
    let angular_rhs = base.torque - omega.cross(&inertia.component_mul(&omega));
    for i in 0..3 {
        a[(i, i)] = m;
        a[(i, 6)] = -force_dir[i];
        b[i] = linear_rhs[i];
        a[(3 + i, 3 + i)] = inertia[i];
        a[(3 + i, 6)] = -torque_dir[i];
        b[3 + i] = angular_rhs[i];
        a[(6, i)] = gamma[i];
        a[(6, 3 + i)] = lever[i];
    }
    b[6] = -v.dot(&gamma_dot) - omega.dot(&lever_dot);

    let x = a
        .lu()
        .solve(&b)
        .ok_or(Error::SingularSystem("Newton-Euler system"))?;
    let normal = x[6];
    let mut friction = base + per_unit.scaled(normal);
    friction.needs_normal_force = per_unit.needs_normal_force;

    let pose_dot = state.pose.map(|p| Pose {
        alpha: p.alpha.cross(&omega),
        beta: p.beta.cross(&omega),
        x: v.dot(&p.alpha),
        y: v.dot(&p.beta),
    });

    Ok(Derivative {
        v_dot: Vector3::new(x[0], x[1], x[2]),
        omega_dot: Vector3::new(x[3], x[4], x[5]),
        gamma_dot,
        pose_dot,
        normal_force: normal,
        friction,
    })
}

/// Friction output of `model` at `state`, resolving the normal force if needed.
pub fn resolved_friction(
    state: &FullState,
    model: &FrictionModel,
    params: &BodyParams,
) -> Result<FrictionOutput> {
    if model.needs_normal_force() {
        Ok(rhs_general(state, model, params)?.friction)
    } else {
        eval_friction(model, state, None, params)
    }
}

/// `(ω̇, γ̇)` of the closed system with `F = 0` and
/// `M_f = -mu_r ω_⊥ - mu_s (ω, γ) γ`:
///
/// `J ω̇ + ω × Iω + m((ω, (r × γ)˙) - g) r × γ = M_f`, `γ̇ = γ × ω`.
pub fn rhs_decoupled(
    omega: &Vector3<f64>,
    gamma: &Vector3<f64>,
    params: &BodyParams,
) -> Result<(Vector3<f64>, Vector3<f64>)> {
    let mass = MassOperator::at(gamma, params);
    let gamma_dot = gamma.cross(omega);
    let lever_dot = lever_rate(gamma, &gamma_dot, params);
    let spin = omega.dot(gamma);
    let horizontal = omega - gamma * spin;
    let torque = -horizontal * params.mu_r - gamma * (params.mu_s * spin);
    let rhs = torque
        - omega.cross(&params.inertia().component_mul(omega))
        - mass.lever * (params.m * (omega.dot(&lever_dot) - params.g));
    Ok((mass.solve(&rhs)?, gamma_dot))
}

fn reorthonormalize(y: &mut [f64]) {
    let gamma = Vector3::new(y[6], y[7], y[8]).normalize();
    y[6..9].copy_from_slice(gamma.as_slice());
    if y.len() >= FullState::DIM_WITH_POSE {
        let alpha = Vector3::new(y[9], y[10], y[11]);
        let alpha = (alpha - gamma * alpha.dot(&gamma)).normalize();
        let beta = gamma.cross(&alpha);
        y[9..12].copy_from_slice(alpha.as_slice());
        y[12..15].copy_from_slice(beta.as_slice());
    }
}

/// The full system as an ODE on `[v, ω, γ]` or `[v, ω, γ, α, β, x, y]`.
#[derive(Debug, Clone)]
pub struct FullSystem {
    pub params: BodyParams,
    pub model: FrictionModel,
    pub with_pose: bool,
}

impl FullSystem {
    pub fn new(params: BodyParams, model: FrictionModel) -> Self {
        Self {
            params,
            model,
            with_pose: false,
        }
    }

    pub fn with_pose(mut self) -> Self {
        self.with_pose = true;
        self
    }

    pub fn derivative(&self, y: &[f64]) -> Result<Derivative> {
        rhs_general(&FullState::from_slice(y), &self.model, &self.params)
    }
}

impl OdeSystem for FullSystem {
    fn dim(&self) -> usize {
        if self.with_pose {
            FullState::DIM_WITH_POSE
        } else {
            FullState::DIM
        }
    }

    fn rhs(&self, _t: f64, y: &[f64], dydt: &mut [f64]) -> Result<()> {
        self.derivative(y)?.write(dydt);
        Ok(())
    }

    fn project(&self, y: &mut [f64]) {
        reorthonormalize(y);
        let (v, omega, gamma) = (
            Vector3::new(y[0], y[1], y[2]),
            Vector3::new(y[3], y[4], y[5]),
            Vector3::new(y[6], y[7], y[8]),
        );
        let normal_slip = (v + omega.cross(&contact_vector(&gamma, &self.params))).dot(&gamma);
        y[0..3].copy_from_slice((v - gamma * normal_slip).as_slice());
    }
}

/// The decoupled system as an ODE on `[ω, γ]`.
#[derive(Debug, Clone, Copy)]
pub struct DecoupledSystem {
    pub params: BodyParams,
}

impl DecoupledSystem {
    pub fn new(params: BodyParams) -> Self {
        Self { params }
    }

    pub fn pack(omega: &Vector3<f64>, gamma: &Vector3<f64>) -> Vec<f64> {
        let mut y = omega.as_slice().to_vec();
        y.extend_from_slice(gamma.as_slice());
        y
    }

    pub fn unpack(y: &[f64]) -> (Vector3<f64>, Vector3<f64>) {
        (
            Vector3::new(y[0], y[1], y[2]),
            Vector3::new(y[3], y[4], y[5]),
        )
    }
}

impl OdeSystem for DecoupledSystem {
    fn dim(&self) -> usize {
        6
    }

    fn rhs(&self, _t: f64, y: &[f64], dydt: &mut [f64]) -> Result<()> {
        let (omega, gamma) = Self::unpack(y);
        let (w, g) = rhs_decoupled(&omega, &gamma, &self.params)?;
        dydt[0..3].copy_from_slice(w.as_slice());
        dydt[3..6].copy_from_slice(g.as_slice());
        Ok(())
    }

    fn project(&self, y: &mut [f64]) {
        let gamma = Vector3::new(y[3], y[4], y[5]).normalize();
        y[3..6].copy_from_slice(gamma.as_slice());
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params() -> BodyParams {
        BodyParams::scaled(0.29, 0.55, 0.51)
            .with_mu(0.4)
            .with_mu_r(1.0)
            .with_mu_s(0.2)
    }

    /// Exact time derivatives of (E, F, G, C) along a derivative, by the chain rule.
    fn integral_rates(s: &FullState, d: &Derivative, p: &BodyParams) -> [f64; 4] {
        let i = p.inertia();
        let iw = i.component_mul(&s.omega);
        let iw_dot = i.component_mul(&d.omega_dot);
        let energy =
            s.omega.dot(&iw_dot) + p.m * s.v.dot(&d.v_dot) + p.m * p.g * p.a * d.gamma_dot.z;
        let lagrange = p.i3 * d.omega_dot.z;
        let r = contact_vector(&s.gamma, p);
        let r_dot = -d.gamma_dot * p.radius;
        let jellett = -(iw_dot.dot(&r) + iw.dot(&r_dot));
        let area = iw_dot.dot(&s.gamma) + iw.dot(&d.gamma_dot);
        [energy, lagrange, jellett, area]
    }

    #[test]
    fn vertical_rest_is_a_fixed_point() {
        let p = params();
        for g3 in [1.0, -1.0] {
            let s = FullState::at_rest(Vector3::new(0.0, 0.0, g3));
            let d = rhs_general(&s, &FrictionModel::Smooth, &p).unwrap();
            assert_eq!(d.v_dot, Vector3::zeros());
            assert_eq!(d.omega_dot, Vector3::zeros());
            assert_eq!(d.gamma_dot, Vector3::zeros());
            assert_relative_eq!(d.normal_force, 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn normal_force_examples() {
        let p = params();
        let zero = FrictionOutput::zero();
        let rest = FullState::at_rest(Vector3::z());
        assert_relative_eq!(
            normal_force(&rest, &zero, &p).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        let spin = FullState::new(Vector3::zeros(), Vector3::new(0.0, 0.0, 7.0), Vector3::z());
        assert_relative_eq!(
            normal_force(&spin, &zero, &p).unwrap(),
            1.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn explicit_normal_force_matches_coupled_solve() {
        let p = params();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for model in [
            FrictionModel::Smooth,
            FrictionModel::ViscousSliding,
            FrictionModel::ContactTorque,
        ] {
            for _ in 0..20 {
                let s = FullState::random_admissible(&mut rng, &p);
                let d = rhs_general(&s, &model, &p).unwrap();
                let n = normal_force(&s, &d.friction, &p).unwrap();
                assert_relative_eq!(n, d.normal_force, epsilon = 1e-11, max_relative = 1e-11);
            }
        }
    }

    #[test]
    fn dry_friction_normal_force_is_self_consistent() {
        let p = params();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let model = FrictionModel::dry();
        for _ in 0..20 {
            let s = FullState::random_admissible(&mut rng, &p);
            let d = rhs_general(&s, &model, &p).unwrap();
            if d.normal_force < 0.0 {
                continue;
            }
            let f = eval_friction(&model, &s, Some(d.normal_force), &p).unwrap();
            assert_relative_eq!(f.force, d.friction.force, epsilon = 1e-12);
            let n = normal_force(&s, &f, &p).unwrap();
            assert_relative_eq!(n, d.normal_force, epsilon = 1e-10, max_relative = 1e-10);
        }
    }

    #[test]
    fn smooth_model_conserves_all_integrals_pointwise() {
        let p = params();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let s = FullState::random_admissible(&mut rng, &p);
            let d = rhs_general(&s, &FrictionModel::Smooth, &p).unwrap();
            for rate in integral_rates(&s, &d, &p) {
                assert!(rate.abs() < 1e-12, "rate {rate:e}");
            }
        }
    }

    #[test]
    fn rolling_resistance_rates() {
        let p = params();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..50 {
            let s = FullState::random_admissible(&mut rng, &p);
            let d = rhs_general(&s, &FrictionModel::RollingResistance, &p).unwrap();
            let [energy, _, _, area] = integral_rates(&s, &d, &p);
            let w_perp = s.omega - s.gamma * s.omega.dot(&s.gamma);
            assert!(area.abs() < 1e-12);
            assert_relative_eq!(energy, -p.mu_r * w_perp.norm_squared(), epsilon = 1e-12);
        }
    }

    #[test]
    fn energy_rate_is_friction_power_for_every_model() {
        let p = params();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for model in FrictionModel::catalog() {
            for _ in 0..20 {
                let s = FullState::random_admissible(&mut rng, &p);
                let d = rhs_general(&s, &model, &p).unwrap();
                let power = crate::integrals::IntegralValues::from_friction(&s, &d.friction, &p)
                    .dissipation;
                assert_relative_eq!(integral_rates(&s, &d, &p)[0], power, epsilon = 1e-11);
            }
        }
    }

    #[test]
    fn constraint_is_preserved_to_second_order() {
        let p = params();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let s = FullState::random_admissible(&mut rng, &p);
            let d = rhs_general(&s, &FrictionModel::ViscousSliding, &p).unwrap();
            let r = contact_vector(&s.gamma, &p);
            let lever = r.cross(&s.gamma);
            let lever_dot = lever_rate(&s.gamma, &d.gamma_dot, &p);
            let f_dot = d.v_dot.dot(&s.gamma)
                + s.v.dot(&d.gamma_dot)
                + d.omega_dot.dot(&lever)
                + s.omega.dot(&lever_dot);
            assert!(f_dot.abs() < 1e-12);
        }
    }

    #[test]
    fn decoupled_matches_general_with_rolling_and_spinning() {
        let p = params();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let model = FrictionModel::Composite {
            models: vec![
                FrictionModel::RollingResistance,
                FrictionModel::SpinningResistance,
            ],
        };
        for _ in 0..50 {
            let s = FullState::random_admissible(&mut rng, &p);
            let d = rhs_general(&s, &model, &p).unwrap();
            let (w, g) = rhs_decoupled(&s.omega, &s.gamma, &p).unwrap();
            assert_relative_eq!(w, d.omega_dot, epsilon = 1e-12);
            assert_relative_eq!(g, d.gamma_dot, epsilon = 1e-15);
        }
    }

    #[test]
    fn vertical_spin_is_a_decoupled_fixed_point() {
        let p = params().with_mu_s(0.0);
        for g3 in [1.0, -1.0] {
            let (w, g) = rhs_decoupled(
                &Vector3::new(0.0, 0.0, 3.0),
                &Vector3::new(0.0, 0.0, g3),
                &p,
            )
            .unwrap();
            assert!(w.amax() < 1e-12 && g.amax() < 1e-12);
        }
    }

    #[test]
    fn mass_operator_is_rank_one_update() {
        let p = params();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let s = FullState::random_admissible(&mut rng, &p);
            let j = MassOperator::at(&s.gamma, &p);
            assert_relative_eq!(j.matrix, j.matrix.transpose());
            let diff = j.matrix - Matrix3::from_diagonal(&p.inertia());
            let sv = diff.singular_values();
            let mut sorted: Vec<f64> = sv.iter().copied().collect();
            sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
            assert!(sorted[1] < 1e-14);
            assert!(j.matrix.cholesky().is_some());
        }
    }

    #[test]
    fn pose_kinematics() {
        let p = params();
        let gamma = Vector3::new(0.1, 0.2, 0.9).normalize();
        let s = FullState::new(
            Vector3::new(0.5, -0.2, 0.0),
            Vector3::new(0.3, 1.0, -2.0),
            gamma,
        )
        .with_pose(Pose::aligned_with(&gamma));
        let s = FullState {
            v: s.v - gamma * crate::model::constraint_residuals(&s, &p).0,
            ..s
        };
        let d = rhs_general(&s, &FrictionModel::Smooth, &p).unwrap();
        let pose = s.pose.unwrap();
        let pd = d.pose_dot.unwrap();
        assert_relative_eq!(pd.alpha, pose.alpha.cross(&s.omega));
        assert_relative_eq!(pd.x, s.v.dot(&pose.alpha));
        assert_relative_eq!(pd.y, s.v.dot(&pose.beta));
    }
}
