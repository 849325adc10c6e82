//! Steady motions of the decoupled system and their linear stability.
//!
//! Vertical rotations `σ_u` (`γ3 = 1`) and `σ_l` (`γ3 = -1`) are fixed points
//! for every `C`. Permanent rotations `σ0` with a tilted axis exist for
//! `|C| ≥ C*` when `i1 ≠ i3` and are fixed points of the reduced flow,
//! parameterized by `c1` with `|c1| > c0 = sqrt(a / |i1 - i3|)`.

use std::fmt;

use nalgebra::{Complex, DMatrix, Vector3};
use serde::{Deserialize, Serialize};

use crate::dynamics::rhs_decoupled;
use crate::error::{Error, Result};
use crate::linalg::{
    characteristic_polynomial, eigenvalues, hurwitz_minors, jacobian_fd, without_smallest, FD_STEP,
};
use crate::model::BodyParams;
use crate::reduction::{rhs_reduced, ReducedState, POLE_BAND};

/// Eigenvalues with `|Re λ|` below this are not used to decide stability.
pub const MARGIN_BAND: f64 = 1e-7;
/// Relative size below which a closed-form minor counts as zero.
pub const MINOR_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FamilyKind {
    #[serde(rename = "sigma_u")]
    Upper,
    #[serde(rename = "sigma_l")]
    Lower,
    #[serde(rename = "sigma_0")]
    Permanent,
}

impl FamilyKind {
    pub fn label(&self) -> &'static str {
        match self {
            FamilyKind::Upper => "sigma_u",
            FamilyKind::Lower => "sigma_l",
            FamilyKind::Permanent => "sigma_0",
        }
    }
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Vertical {
    Upper,
    Lower,
}

impl Vertical {
    pub fn sign(&self) -> f64 {
        match self {
            Vertical::Upper => 1.0,
            Vertical::Lower => -1.0,
        }
    }

    pub fn kind(&self) -> FamilyKind {
        match self {
            Vertical::Upper => FamilyKind::Upper,
            Vertical::Lower => FamilyKind::Lower,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    Stable,
    Unstable,
    Marginal,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Stable => "stable",
            Verdict::Unstable => "unstable",
            Verdict::Marginal => "marginal",
        })
    }
}

/// `C* = i3 sqrt(a) / sqrt|i1 - i3|`, or `None` when `σ0` does not exist.
pub fn critical_area(params: &BodyParams) -> Option<f64> {
    let delta = params.i1 - params.i3;
    if delta == 0.0 || params.a <= 0.0 {
        return None;
    }
    Some(params.i3 * params.a.sqrt() / delta.abs().sqrt())
}

/// `c0 = sqrt(a / |i1 - i3|)`.
pub fn sigma0_threshold(params: &BodyParams) -> Option<f64> {
    let delta = params.i1 - params.i3;
    if delta == 0.0 || params.a <= 0.0 {
        return None;
    }
    Some((params.a / delta.abs()).sqrt())
}

/// `C(c1) = -c1 i1 + a² / (c1³ (i1 - i3))`.
pub fn sigma0_area(c1: f64, params: &BodyParams) -> f64 {
    -c1 * params.i1 + params.a * params.a / (c1.powi(3) * (params.i1 - params.i3))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumFamily {
    pub kind: FamilyKind,
    /// `C` for vertical rotations, `c1` for `σ0`.
    pub parameter: f64,
    pub gamma3: f64,
    pub k1: f64,
    pub k2: f64,
    pub c: f64,
    pub omega: Vector3<f64>,
    pub gamma: Vector3<f64>,
    pub energy: f64,
}

impl EquilibriumFamily {
    pub fn vertical(which: Vertical, c: f64, params: &BodyParams) -> Self {
        let s = which.sign();
        let omega = Vector3::new(0.0, 0.0, s * c / params.i3);
        Self {
            kind: which.kind(),
            parameter: c,
            gamma3: s,
            k1: s * c,
            k2: 0.0,
            c,
            omega,
            gamma: Vector3::new(0.0, 0.0, s),
            energy: c * c / (2.0 * params.i3) + s * params.m * params.g * params.a,
        }
    }

    /// Chart representation with `φ` matching `gamma`. Meaningless for vertical rotations.
    pub fn reduced(&self) -> ReducedState {
        ReducedState {
            gamma3: self.gamma3,
            k1: self.k1,
            k2: self.k2,
            c: self.c,
            phi: self.gamma.y.atan2(self.gamma.x),
        }
    }
}

/// The permanent rotation with parameter `c1`, at precession phase `φ = π`.
pub fn sigma0_family(c1: f64, params: &BodyParams) -> Result<EquilibriumFamily> {
    let c0 = sigma0_threshold(params).ok_or(Error::NoFamily)?;
    if !(c1.abs() > c0) {
        return Err(Error::OutsideFamily { c1, c0 });
    }
    let delta = params.i1 - params.i3;
    let gamma3 = -params.a / (c1 * c1 * delta);
    let rho = (1.0 - gamma3 * gamma3).sqrt();
    let omega = Vector3::new(c1 * rho, 0.0, params.a / (c1 * delta));
    let gamma = Vector3::new(-rho, 0.0, gamma3);
    let energy = 0.5 * omega.dot(&params.inertia().component_mul(&omega))
        + params.m * params.g * params.a * gamma3;
    Ok(EquilibriumFamily {
        kind: FamilyKind::Permanent,
        parameter: c1,
        gamma3,
        k1: params.a * params.i3 / (c1 * delta),
        k2: 0.0,
        c: sigma0_area(c1, params),
        omega,
        gamma,
        energy,
    })
}

/// All `c1` with `C(c1) = c`, in increasing order.
pub fn sigma0_parameters_for_area(c: f64, params: &BodyParams) -> Vec<f64> {
    let Some(c0) = sigma0_threshold(params) else {
        return Vec::new();
    };
    let delta = params.i1 - params.i3;
    // c1³ (C(c1) - c) = -i1 c1⁴ - c c1³ + a²/Δ
    let lead = -params.i1;
    let poly = [
        1.0,
        c / lead,
        0.0,
        0.0,
        params.a * params.a / (delta * lead),
    ];
    let companion = DMatrix::from_fn(4, 4, |i, j| {
        if i == 0 {
            -poly[j + 1]
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    let mut roots: Vec<f64> = eigenvalues(&companion)
        .into_iter()
        .filter(|z| z.im.abs() <= 1e-7 * (1.0 + z.re.abs()))
        .map(|z| polish_root(z.re, c, params))
        .filter(|r| r.abs() > c0 && (sigma0_area(*r, params) - c).abs() <= 1e-9 * (1.0 + c.abs()))
        .filter(|r| (params.a / (r * r * delta)).abs() < 1.0 - POLE_BAND)
        .collect();
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * (1.0 + b.abs()));
    roots
}

fn polish_root(mut x: f64, c: f64, params: &BodyParams) -> f64 {
    let delta = params.i1 - params.i3;
    for _ in 0..50 {
        let f = sigma0_area(x, params) - c;
        let df = -params.i1 - 3.0 * params.a * params.a / (x.powi(4) * delta);
        if df == 0.0 || !df.is_finite() {
            break;
        }
        let step = f / df;
        x -= step;
        if step.abs() <= 1e-16 * x.abs() {
            break;
        }
    }
    x
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub kind: FamilyKind,
    pub parameter: f64,
    pub gamma3: f64,
    pub c: f64,
    /// `a0..a4` of the vertical quartic or `a0..a3` of the `σ0` cubic.
    pub coefficients: Vec<f64>,
    /// Hurwitz minors `Δ1..Δ4`, or the cubic conditions `a0, a1, a1 a2 - a0 a3, a3`.
    pub minors: Vec<f64>,
    /// Spectrum of the linearization with the integral directions removed.
    pub eigenvalues: Vec<Complex<f64>>,
    pub verdict: Verdict,
    pub numeric_verdict: Verdict,
    pub condition: String,
}

impl StabilityReport {
    /// Closed form and spectrum agree, or one of them is inside its margin.
    pub fn consistent(&self) -> bool {
        self.verdict == self.numeric_verdict
            || self.verdict == Verdict::Marginal
            || self.numeric_verdict == Verdict::Marginal
    }

    pub fn max_real_part(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

fn spectral_verdict(ev: &[Complex<f64>]) -> Verdict {
    let max_re = ev.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    if max_re > MARGIN_BAND {
        Verdict::Unstable
    } else if max_re < -MARGIN_BAND {
        Verdict::Stable
    } else {
        Verdict::Marginal
    }
}

/// Routh–Hurwitz verdict from conditions paired with their natural scales.
fn sign_verdict(conditions: &[(f64, f64)]) -> Verdict {
    let mut marginal = false;
    for &(value, scale) in conditions {
        if value.abs() <= MINOR_REL_TOL * scale {
            marginal = true;
        } else if value < 0.0 {
            return Verdict::Unstable;
        }
    }
    if marginal {
        Verdict::Marginal
    } else {
        Verdict::Stable
    }
}

/// Coefficients `a0..a4` of the characteristic quartic at a vertical rotation.
pub fn vertical_quartic(which: Vertical, c: f64, params: &BodyParams) -> [f64; 5] {
    let (a, i1, i3, mu) = (params.a, params.i1, params.i3, params.mu_r);
    let delta = i1 - i3;
    let q = c * c / (i3 * i3);
    let s = which.sign();
    let f = a + s * q * delta;
    [
        i1 * i1,
        2.0 * i1 * mu,
        mu * mu - s * 2.0 * a * i1 + q * (i1 * i1 + delta * delta),
        -s * 2.0 * mu * f,
        f * f,
    ]
}

/// Closed-form Hurwitz minors at a vertical rotation, each paired with a scale
/// for the zero test.
fn vertical_minors(which: Vertical, c: f64, params: &BodyParams) -> [(f64, f64); 4] {
    let (a, i1, i3, mu) = (params.a, params.i1, params.i3, params.mu_r);
    let q = c * c / (i3 * i3);
    let s = which.sign();
    let quad = 3.0 * i1 * i1 - 3.0 * i1 * i3 + i3 * i3;
    let d1 = 2.0 * i1 * mu;
    let d2 = 2.0 * i1 * mu * (q * quad - s * a * i1 + mu * mu);
    let d2_scale = 2.0 * i1 * mu * (q * quad + a * i1 + mu * mu);
    // Δ3 = ∓4 i1 μ² (C²(2 i1 - i3)²/i3² + μ²) (a ± C²(i1 - i3)/i3²)
    let factor = a + s * q * (i1 - i3);
    let factor_scale = a + q * (i1 - i3).abs();
    let pre = 4.0 * i1 * mu * mu * (q * (2.0 * i1 - i3).powi(2) + mu * mu);
    let d3 = -s * pre * factor;
    let d4 = -s * pre * factor.powi(3);
    [
        (d1, d1.abs()),
        (d2, d2_scale),
        (d3, pre * factor_scale),
        (d4, pre * factor_scale.powi(3)),
    ]
}

fn vertical_condition(which: Vertical, params: &BodyParams, verdict: Verdict) -> String {
    if params.mu_r == 0.0 {
        return "mu_r = 0".into();
    }
    let (i1, i3) = (params.i1, params.i3);
    let edge = match verdict {
        Verdict::Stable => "|C| < C*",
        Verdict::Unstable => "|C| > C*",
        Verdict::Marginal => "|C| = C*",
    };
    let edge_upper = match verdict {
        Verdict::Stable => "|C| > C*",
        Verdict::Unstable => "|C| < C*",
        Verdict::Marginal => "|C| = C*",
    };
    match which {
        Vertical::Lower if i1 > i3 => format!("{edge}, i1 > i3"),
        Vertical::Lower if i1 < i3 => "i1 < i3".into(),
        Vertical::Upper if i1 < i3 => format!("{edge_upper}, i1 < i3"),
        Vertical::Upper if i1 > i3 => "i1 > i3".into(),
        _ => "i1 = i3".into(),
    }
}

/// Linearization of the six-dimensional `(ω, γ)` system at a vertical rotation.
#[derive(Debug, Clone, PartialEq)]
pub struct Linearization {
    pub jacobian: DMatrix<f64>,
    pub eigenvalues: Vec<Complex<f64>>,
    /// Eigenvalues with `|λ| < MARGIN_BAND`.
    pub zero_eigenvalues: usize,
    /// Monic quartic factor `[1, c1, c2, c3, c4]` of the characteristic polynomial.
    pub quartic: [f64; 5],
    /// Spectrum with the two integral directions removed.
    pub reduced_spectrum: Vec<Complex<f64>>,
}

pub fn linearize_full(which: Vertical, c: f64, params: &BodyParams) -> Result<Linearization> {
    let fam = EquilibriumFamily::vertical(which, c, params);
    let mut x = fam.omega.as_slice().to_vec();
    x.extend_from_slice(fam.gamma.as_slice());
    let f = |y: &[f64], out: &mut [f64]| {
        let (w, g) = rhs_decoupled(
            &Vector3::new(y[0], y[1], y[2]),
            &Vector3::new(y[3], y[4], y[5]),
            params,
        )?;
        out[..3].copy_from_slice(w.as_slice());
        out[3..].copy_from_slice(g.as_slice());
        Ok(())
    };
    let jacobian = jacobian_fd(f, &x, 6, FD_STEP)?;
    let ev = eigenvalues(&jacobian);
    let zero_eigenvalues = ev.iter().filter(|z| z.norm() < MARGIN_BAND).count();
    let poly = characteristic_polynomial(&jacobian);
    let quartic = [poly[0], poly[1], poly[2], poly[3], poly[4]];
    let (reduced_spectrum, _) = without_smallest(ev.clone(), 2);
    Ok(Linearization {
        jacobian,
        eigenvalues: ev,
        zero_eigenvalues,
        quartic,
        reduced_spectrum,
    })
}

/// Routh–Hurwitz classification of a vertical rotation at area integral `c`.
pub fn hurwitz_vertical(which: Vertical, c: f64, params: &BodyParams) -> Result<StabilityReport> {
    params.validate()?;
    let coefficients = vertical_quartic(which, c, params).to_vec();
    let minors = vertical_minors(which, c, params);
    let verdict = if params.mu_r == 0.0 {
        Verdict::Marginal
    } else {
        sign_verdict(&minors)
    };
    let lin = linearize_full(which, c, params)?;
    let numeric_verdict = spectral_verdict(&lin.reduced_spectrum);
    Ok(StabilityReport {
        kind: which.kind(),
        parameter: c,
        gamma3: which.sign(),
        c,
        coefficients,
        minors: minors.iter().map(|m| m.0).collect(),
        eigenvalues: lin.reduced_spectrum,
        verdict,
        numeric_verdict,
        condition: vertical_condition(which, params, verdict),
    })
}

/// Coefficients `a0..a3` of the characteristic cubic at `σ0` in terms of `c2 = γ3`.
pub fn sigma0_cubic(c2: f64, params: &BodyParams) -> [f64; 4] {
    let (a, i1, i3, mu) = (params.a, params.i1, params.i3, params.mu_r);
    let d = i1 - i3;
    let s = 1.0 - c2 * c2;
    [
        -i1 * i3 * c2 * d * (i1 + a * a * s),
        -mu * c2
            * d
            * (i1 * i3 * (1.0 + c2 * c2) + (i1 * i1 + i1 * a * a - a * a * c2 * c2 * d) * s),
        -mu * mu * c2 * d * (i1 - c2 * c2 * d) + a * i3 * (i1 * i1 + c2 * c2 * d * (3.0 * i1 - i3)),
        a * mu * d * s * (i1 + 3.0 * c2 * c2 * d),
    ]
}

fn sigma0_conditions(c2: f64, params: &BodyParams) -> [(f64, f64); 4] {
    let (a, i1, i3, mu) = (params.a, params.i1, params.i3, params.mu_r);
    let d = i1 - i3;
    let ad = d.abs();
    let s = 1.0 - c2 * c2;
    let k = sigma0_cubic(c2, params);
    let scale0 = (i1 * i3 * c2 * d * (i1 + a * a * s)).abs();
    let scale1 = (mu * c2 * d).abs()
        * (i1 * i3 * (1.0 + c2 * c2) + (i1 * i1 + i1 * a * a + a * a * c2 * c2 * ad) * s);
    let scale3 = a * mu * ad * s * (i1 + 3.0 * c2 * c2 * ad);
    let hurwitz = k[1] * k[2] - k[0] * k[3];
    let scale_h = (k[1] * k[2]).abs() + (k[0] * k[3]).abs();
    [
        (k[0], scale0),
        (k[1], scale1),
        (hurwitz, scale_h),
        (k[3], scale3),
    ]
}

/// Jacobian of the reduced flow in `(γ3, K1, K2)` at fixed `C`.
pub fn reduced_jacobian(rs: &ReducedState, params: &BodyParams) -> Result<DMatrix<f64>> {
    let f = |y: &[f64], out: &mut [f64]| {
        let d = rhs_reduced(&ReducedState::new(y[0], y[1], y[2], rs.c), params)?;
        out.copy_from_slice(&d);
        Ok(())
    };
    jacobian_fd(f, &[rs.gamma3, rs.k1, rs.k2], 3, FD_STEP)
}

/// Routh–Hurwitz classification of the permanent rotation with parameter `c1`.
pub fn sigma0_characteristic(c1: f64, params: &BodyParams) -> Result<StabilityReport> {
    params.validate()?;
    let fam = sigma0_family(c1, params)?;
    let coefficients = sigma0_cubic(fam.gamma3, params).to_vec();
    let conditions = sigma0_conditions(fam.gamma3, params);
    let verdict = if params.mu_r == 0.0 {
        Verdict::Marginal
    } else {
        sign_verdict(&conditions)
    };
    let jac = reduced_jacobian(&fam.reduced(), params)?;
    let ev = eigenvalues(&jac);
    let condition = if params.mu_r == 0.0 {
        "mu_r = 0".to_string()
    } else if params.i1 > params.i3 {
        "i1 > i3".to_string()
    } else {
        "i1 < i3".to_string()
    };
    Ok(StabilityReport {
        kind: FamilyKind::Permanent,
        parameter: c1,
        gamma3: fam.gamma3,
        c: fam.c,
        coefficients,
        minors: conditions.iter().map(|m| m.0).collect(),
        numeric_verdict: spectral_verdict(&ev),
        eigenvalues: ev,
        verdict,
        condition,
    })
}

/// Generic Hurwitz minors of the closed-form coefficients, for cross-checks.
pub fn generic_minors(report: &StabilityReport) -> Vec<f64> {
    hurwitz_minors(&report.coefficients)
}
