//! Dynamics of an unbalanced axisymmetric ball (tippe top) rolling with
//! slipping on a horizontal plane under pluggable resistance laws.
//!
//! The crate covers the full Newton–Euler system with normal-reaction
//! coupling, the decoupled `(ω, γ)` system of the rolling-resistance model,
//! its symmetry reduction to `(γ3, K1, K2)`, the permanent-rotation families
//! and their Routh–Hurwitz classification, and an adaptive Dormand–Prince
//! integrator with invariant projection and event location.
//!
//! All vectors live in body axes. Internal computation is done in
//! dimensionless units (`m = R = g = 1`); see [`BodyParams::nondimensionalize`].

pub mod dynamics;
pub mod equilibria;
pub mod error;
pub mod friction;
pub mod integrals;
pub mod integrate;
pub mod linalg;
pub mod model;
pub mod reduced_flow;
pub mod reduction;

pub use dynamics::{
    normal_force, rhs_decoupled, rhs_general, DecoupledSystem, FullSystem, MassOperator,
};
pub use equilibria::{
    critical_area, hurwitz_vertical, linearize_full, sigma0_area, sigma0_characteristic,
    sigma0_family, sigma0_parameters_for_area, sigma0_threshold, EquilibriumFamily, FamilyKind,
    Linearization, StabilityReport, Verdict, Vertical,
};
pub use error::{Error, Result};
pub use friction::{
    conservation_signature, eval_friction, FrictionModel, FrictionOutput, Integral, IntegralSet,
};
pub use integrals::{evaluate_integrals, family_energy, DiagnosticRecord, IntegralValues};
pub use integrate::{
    integrate, integrate_with, EventFn, EventHit, Hooks, IntegratorConfig, Method, OdeSystem,
    Solution, Stats, Termination,
};
pub use model::{
    constraint_residuals, contact_vector, contact_velocity, BodyParams, FullState, Pose,
};
pub use reduced_flow::{integrate_reduced, FlowPoint, FlowSolution, Mode};
pub use reduction::{
    from_reduced, rhs_phi, rhs_reduced, rhs_reduced_spinning, to_reduced, ReducedState,
    ReducedSystem,
};

pub use nalgebra::{Complex, Vector3};
