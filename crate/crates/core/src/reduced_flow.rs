//! Reduced-flow integration that continues through the poles.
//!
//! The chart integration runs until `|γ3|` reaches `1 - ENTER_FULL`; from
//! there the decoupled `(ω, γ)` system takes over and hands back once `|γ3|`
//! drops below `1 - LEAVE_FULL`.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::dynamics::DecoupledSystem;
use crate::error::{Error, Result};
use crate::integrate::{integrate_with, EventFn, EventHit, Hooks, IntegratorConfig, Termination};
use crate::model::BodyParams;
use crate::reduction::{from_reduced, nutation_scale, to_reduced, ReducedState, ReducedSystem};

/// Distance from the pole at which the chart hands over to the full system.
pub const ENTER_FULL: f64 = 1e-6;
/// Distance from the pole at which the full system hands back to the chart.
pub const LEAVE_FULL: f64 = 1e-3;
const MAX_SWITCHES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Chart,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowPoint {
    pub t: f64,
    pub gamma3: f64,
    pub k1: f64,
    pub k2: f64,
    pub c: f64,
    pub phi: f64,
    pub mode: Mode,
    pub omega: Vector3<f64>,
    pub gamma: Vector3<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowSolution {
    pub points: Vec<FlowPoint>,
    pub termination: Termination,
    /// Times at which the integration switched between chart and full system.
    pub switches: Vec<f64>,
    /// Times at which `|C|` crossed the requested threshold.
    pub crossings: Vec<f64>,
}

impl FlowSolution {
    pub fn last(&self) -> &FlowPoint {
        self.points
            .last()
            .expect("solution holds the initial point")
    }
}

fn chart_point(t: f64, y: &[f64], params: &BodyParams) -> FlowPoint {
    let rs = ReducedState::from_slice(y);
    let rho = (1.0 - rs.gamma3 * rs.gamma3).max(0.0).sqrt();
    FlowPoint {
        t,
        gamma3: y[0],
        k1: y[1],
        k2: y[2],
        c: y[3],
        phi: y[4],
        mode: Mode::Chart,
        omega: from_reduced_unchecked(&rs, params),
        gamma: Vector3::new(rho * rs.phi.cos(), rho * rs.phi.sin(), rs.gamma3),
    }
}

fn full_point(t: f64, y: &[f64], params: &BodyParams) -> FlowPoint {
    let (omega, gamma) = DecoupledSystem::unpack(y);
    let k = nutation_scale(gamma.z, params);
    let cross = gamma.x * omega.y - gamma.y * omega.x;
    FlowPoint {
        t,
        gamma3: gamma.z,
        k1: params.i3 * omega.z,
        k2: if k > 0.0 { cross / k } else { 0.0 },
        c: params.inertia().component_mul(&omega).dot(&gamma),
        phi: gamma.y.atan2(gamma.x),
        mode: Mode::Full,
        omega,
        gamma,
    }
}

fn area_of_full(y: &[f64], params: &BodyParams) -> f64 {
    let (omega, gamma) = DecoupledSystem::unpack(y);
    params.inertia().component_mul(&omega).dot(&gamma)
}

/// Integrate the reduced flow (with spinning friction when `mu_s > 0`) from
/// `start` over `cfg.t_end`. With `area_threshold = Some(C*)` the times at
/// which `|C|` crosses `C*` are located.
pub fn integrate_reduced(
    start: &ReducedState,
    params: &BodyParams,
    cfg: &IntegratorConfig,
    area_threshold: Option<f64>,
) -> Result<FlowSolution> {
    let mut sol = FlowSolution {
        points: Vec::new(),
        termination: Termination::Reached,
        switches: Vec::new(),
        crossings: Vec::new(),
    };
    let t_final = cfg.t_end;
    let mut t = 0.0;
    let near_pole = start.gamma3.abs() >= 1.0 - ENTER_FULL;
    let mut state = if near_pole {
        let rho = (1.0 - start.gamma3 * start.gamma3).max(0.0).sqrt();
        let gamma = Vector3::new(
            rho * start.phi.cos(),
            rho * start.phi.sin(),
            start.gamma3.clamp(-1.0, 1.0),
        );
        let omega = if rho > 0.0 {
            from_reduced_unchecked(start, params)
        } else {
            Vector3::new(0.0, 0.0, start.k1 / params.i3)
        };
        (Mode::Full, DecoupledSystem::pack(&omega, &gamma))
    } else {
        (Mode::Chart, start.to_vec())
    };
    sol.points.push(match state.0 {
        Mode::Chart => chart_point(0.0, &state.1, params),
        Mode::Full => full_point(0.0, &state.1, params),
    });

    loop {
        if sol.switches.len() > MAX_SWITCHES {
            return Err(Error::TooManySteps(MAX_SWITCHES));
        }
        let remaining = t_final - t;
        if remaining <= 0.0 {
            sol.termination = Termination::Reached;
            break;
        }
        let seg_cfg = IntegratorConfig {
            t_end: remaining,
            ..cfg.clone()
        };
        let (mode, y0) = state.clone();
        let (seg, handover) = match mode {
            Mode::Chart => {
                let sys = ReducedSystem::new(*params);
                let mut hooks = Hooks::default()
                    .with_event(EventFn::new(|_, y| y[0].abs() - (1.0 - ENTER_FULL), true));
                if let Some(cs) = area_threshold {
                    hooks = hooks.with_event(EventFn::new(move |_, y| y[3].abs() - cs, false));
                }
                let seg = integrate_with(&sys, t, &y0, &seg_cfg, &mut hooks)?;
                let pts: Vec<FlowPoint> = seg
                    .t
                    .iter()
                    .zip(&seg.y)
                    .map(|(t, y)| chart_point(*t, y, params))
                    .collect();
                (SegmentResult::from(seg, pts), Mode::Full)
            }
            Mode::Full => {
                let sys = DecoupledSystem::new(*params);
                let p = *params;
                let mut hooks = Hooks::default()
                    .with_event(EventFn::new(|_, y| (1.0 - LEAVE_FULL) - y[5].abs(), true));
                if let Some(cs) = area_threshold {
                    hooks = hooks.with_event(EventFn::new(
                        move |_, y| area_of_full(y, &p).abs() - cs,
                        false,
                    ));
                }
                let seg = integrate_with(&sys, t, &y0, &seg_cfg, &mut hooks)?;
                let pts: Vec<FlowPoint> = seg
                    .t
                    .iter()
                    .zip(&seg.y)
                    .map(|(t, y)| full_point(*t, y, params))
                    .collect();
                (SegmentResult::from(seg, pts), Mode::Chart)
            }
        };
        sol.points.extend(seg.points.into_iter().skip(1));
        sol.crossings
            .extend(seg.events.iter().filter(|e| e.index == 1).map(|e| e.t));
        match seg.termination {
            Termination::Event(0) => {
                let hit = seg
                    .events
                    .iter()
                    .find(|e| e.index == 0)
                    .expect("terminal event recorded");
                t = hit.t;
                sol.switches.push(t);
                state = match handover {
                    Mode::Full => {
                        let (omega, gamma) =
                            from_reduced(&ReducedState::from_slice(&hit.y), params)?;
                        (Mode::Full, DecoupledSystem::pack(&omega, &gamma))
                    }
                    Mode::Chart => {
                        let (omega, gamma) = DecoupledSystem::unpack(&hit.y);
                        (
                            Mode::Chart,
                            to_reduced(&omega, &gamma.normalize(), params)?.to_vec(),
                        )
                    }
                };
            }
            other => {
                sol.termination = other;
                break;
            }
        }
    }
    Ok(sol)
}

fn from_reduced_unchecked(rs: &ReducedState, params: &BodyParams) -> Vector3<f64> {
    let s = 1.0 - rs.gamma3 * rs.gamma3;
    let rho = s.sqrt();
    let (g1, g2) = (rho * rs.phi.cos(), rho * rs.phi.sin());
    let k = nutation_scale(rs.gamma3, params);
    let along = rs.c - rs.gamma3 * rs.k1;
    let across = params.i1 * k * rs.k2;
    let denom = params.i1 * s;
    Vector3::new(
        (along * g1 - across * g2) / denom,
        (along * g2 + across * g1) / denom,
        rs.k1 / params.i3,
    )
}

struct SegmentResult {
    points: Vec<FlowPoint>,
    termination: Termination,
    events: Vec<EventHit>,
}

impl SegmentResult {
    fn from(sol: crate::integrate::Solution, points: Vec<FlowPoint>) -> Self {
        Self {
            points,
            termination: sol.termination,
            events: sol.events,
        }
    }
}
