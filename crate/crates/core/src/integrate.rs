//! Explicit Runge–Kutta integration with error control, projection after
//! accepted steps, steady-state detection and event location.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An autonomous or time-dependent first-order system `y' = f(t, y)`.
pub trait OdeSystem {
    fn dim(&self) -> usize;

    fn rhs(&self, t: f64, y: &[f64], dydt: &mut [f64]) -> Result<()>;

    /// Pull `y` back onto the invariant manifold after an accepted step.
    fn project(&self, _y: &mut [f64]) {}

    /// Norm used by steady-state detection. Override to exclude cyclic coordinates.
    fn steady_norm(&self, dydt: &[f64]) -> f64 {
        inf_norm(dydt)
    }
}

impl<S: OdeSystem + ?Sized> OdeSystem for &S {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn rhs(&self, t: f64, y: &[f64], dydt: &mut [f64]) -> Result<()> {
        (**self).rhs(t, y, dydt)
    }
    fn project(&self, y: &mut [f64]) {
        (**self).project(y)
    }
    fn steady_norm(&self, dydt: &[f64]) -> f64 {
        (**self).steady_norm(dydt)
    }
}

pub(crate) fn inf_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| nan_max(m, v.abs()))
}

// `f64::max` would discard NaN.
fn nan_max(m: f64, x: f64) -> f64 {
    if x.is_nan() || x > m {
        x
    } else {
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Dormand–Prince 5(4) with local extrapolation.
    #[default]
    DormandPrince54,
    /// Classical RK4 with fixed step `dt_init`.
    Rk4,
}

/// Accepted steps with derivative norm below `steady_state_eps` needed to declare convergence.
pub const STEADY_STEPS: usize = 10;
/// Time resolution of event location.
pub const EVENT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub method: Method,
    pub rtol: f64,
    pub atol: f64,
    pub dt_init: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub t_end: f64,
    pub renormalize_gamma: bool,
    /// Zero disables steady-state detection.
    pub steady_state_eps: f64,
    /// Record every `stride`-th accepted step. The first and last states are always kept.
    pub stride: usize,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            method: Method::DormandPrince54,
            rtol: 1e-10,
            atol: 1e-10,
            dt_init: 1e-3,
            dt_min: 1e-12,
            dt_max: 0.5,
            t_end: 10.0,
            renormalize_gamma: true,
            steady_state_eps: 1e-10,
            stride: 1,
            max_steps: 50_000_000,
        }
    }
}

impl IntegratorConfig {
    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.rtol = tol;
        self.atol = tol;
        self
    }

    pub fn with_t_end(mut self, t_end: f64) -> Self {
        self.t_end = t_end;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidConfig(what.to_string()));
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return bad("rtol and atol must be positive");
        }
        if !(self.dt_init > 0.0 && self.dt_min > 0.0 && self.dt_min <= self.dt_max) {
            return bad("step bounds must satisfy 0 < dt_min <= dt_max and dt_init > 0");
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad("t_end must be positive and finite");
        }
        if !(self.steady_state_eps >= 0.0) {
            return bad("steady_state_eps must be non-negative");
        }
        if self.stride == 0 {
            return bad("stride must be at least 1");
        }
        if self.max_steps == 0 {
            return bad("max_steps must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Reached,
    Converged,
    Stopped,
    /// A terminal event fired; holds its index.
    Event(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventHit {
    pub index: usize,
    pub t: f64,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub t: Vec<f64>,
    pub y: Vec<Vec<f64>>,
    pub termination: Termination,
    pub events: Vec<EventHit>,
    pub stats: Stats,
}

impl Solution {
    pub fn last(&self) -> (f64, &[f64]) {
        (*self.t.last().unwrap(), self.y.last().unwrap())
    }
}

/// Scalar event function; a sign change between accepted steps is located by bisection.
pub struct EventFn<'a> {
    pub g: Box<dyn Fn(f64, &[f64]) -> f64 + 'a>,
    pub terminal: bool,
}

impl<'a> EventFn<'a> {
    pub fn new(g: impl Fn(f64, &[f64]) -> f64 + 'a, terminal: bool) -> Self {
        Self {
            g: Box::new(g),
            terminal,
        }
    }
}

/// Callbacks run on accepted steps.
#[derive(Default)]
pub struct Hooks<'a> {
    pub events: Vec<EventFn<'a>>,
    /// Returning `true` ends the run with [`Termination::Stopped`].
    pub stop: Option<Box<dyn FnMut(f64, &[f64]) -> bool + 'a>>,
    /// Sees every accepted step, including ones dropped by `stride`.
    pub observer: Option<Box<dyn FnMut(f64, &[f64]) + 'a>>,
}

impl<'a> Hooks<'a> {
    pub fn with_event(mut self, event: EventFn<'a>) -> Self {
        self.events.push(event);
        self
    }

    pub fn with_stop(mut self, stop: impl FnMut(f64, &[f64]) -> bool + 'a) -> Self {
        self.stop = Some(Box::new(stop));
        self
    }

    pub fn with_observer(mut self, observer: impl FnMut(f64, &[f64]) + 'a) -> Self {
        self.observer = Some(Box::new(observer));
        self
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

struct Workspace {
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
    err: Vec<f64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Self {
            k: std::array::from_fn(|_| vec![0.0; n]),
            tmp: vec![0.0; n],
            err: vec![0.0; n],
        }
    }
}

fn stage(tmp: &mut [f64], y: &[f64], h: f64, terms: &[(f64, &[f64])]) {
    for i in 0..y.len() {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        tmp[i] = y[i] + h * acc;
    }
}

/// One Dormand–Prince step from `(t, y)` with `ws.k[0] = f(t, y)`. Leaves the
/// fifth-order result in `out`, `f(t + h, out)` in `ws.k[6]` and the error
/// estimate in `ws.err`.
fn dp_step<S: OdeSystem>(
    sys: &S,
    t: f64,
    y: &[f64],
    h: f64,
    ws: &mut Workspace,
    out: &mut [f64],
) -> Result<()> {
    let [k1, k2, k3, k4, k5, k6, k7] = &mut ws.k;
    let tmp = &mut ws.tmp;
    stage(tmp, y, h, &[(A21, k1)]);
    sys.rhs(t + C2 * h, tmp, k2)?;
    stage(tmp, y, h, &[(A31, k1), (A32, k2)]);
    sys.rhs(t + C3 * h, tmp, k3)?;
    stage(tmp, y, h, &[(A41, k1), (A42, k2), (A43, k3)]);
    sys.rhs(t + C4 * h, tmp, k4)?;
    stage(tmp, y, h, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)]);
    sys.rhs(t + C5 * h, tmp, k5)?;
    stage(
        tmp,
        y,
        h,
        &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)],
    );
    sys.rhs(t + h, tmp, k6)?;
    stage(
        out,
        y,
        h,
        &[(B1, k1), (B3, k3), (B4, k4), (B5, k5), (B6, k6)],
    );
    sys.rhs(t + h, out, k7)?;
    for i in 0..y.len() {
        ws.err[i] =
            h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
    }
    Ok(())
}

/// Classical RK4 step; `ws.k[0] = f(t, y)` on entry.
fn rk4_step<S: OdeSystem>(
    sys: &S,
    t: f64,
    y: &[f64],
    h: f64,
    ws: &mut Workspace,
    out: &mut [f64],
) -> Result<()> {
    let [k1, k2, k3, k4, ..] = &mut ws.k;
    let tmp = &mut ws.tmp;
    stage(tmp, y, 0.5 * h, &[(1.0, k1)]);
    sys.rhs(t + 0.5 * h, tmp, k2)?;
    stage(tmp, y, 0.5 * h, &[(1.0, k2)]);
    sys.rhs(t + 0.5 * h, tmp, k3)?;
    stage(tmp, y, h, &[(1.0, k3)]);
    sys.rhs(t + h, tmp, k4)?;
    stage(
        out,
        y,
        h / 6.0,
        &[(1.0, k1), (2.0, k2), (2.0, k3), (1.0, k4)],
    );
    Ok(())
}

/// Largest component of the error scaled by `atol + rtol |y|`.
fn error_norm(err: &[f64], y0: &[f64], y1: &[f64], cfg: &IntegratorConfig) -> f64 {
    err.iter()
        .zip(y0.iter().zip(y1))
        .fold(0.0, |m, (e, (a, b))| {
            let sc = cfg.atol + cfg.rtol * a.abs().max(b.abs());
            nan_max(m, (e / sc).abs())
        })
}

pub fn integrate<S: OdeSystem>(
    sys: &S,
    t0: f64,
    y0: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Solution> {
    integrate_with(sys, t0, y0, cfg, &mut Hooks::default())
}

/// Integrate from `t0` to `t0 + cfg.t_end`.
pub fn integrate_with<S: OdeSystem>(
    sys: &S,
    t0: f64,
    y0: &[f64],
    cfg: &IntegratorConfig,
    hooks: &mut Hooks<'_>,
) -> Result<Solution> {
    cfg.validate()?;
    let n = sys.dim();
    if y0.len() != n {
        return Err(Error::InvalidConfig(format!(
            "initial state has length {}, system expects {n}",
            y0.len()
        )));
    }
    if y0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { t: t0 });
    }
    let t_final = t0 + cfg.t_end;
    let mut ws = Workspace::new(n);
    let mut y = y0.to_vec();
    let mut y_new = vec![0.0; n];
    let mut t = t0;
    let mut stats = Stats::default();
    let mut sol = Solution {
        t: vec![t0],
        y: vec![y.clone()],
        termination: Termination::Reached,
        events: Vec::new(),
        stats,
    };

    sys.rhs(t, &y, &mut ws.k[0])?;
    stats.rhs_evals += 1;
    let mut g_prev: Vec<f64> = hooks.events.iter().map(|e| (e.g)(t, &y)).collect();
    let mut quiet = 0usize;
    let mut h = match cfg.method {
        Method::DormandPrince54 => cfg.dt_init.min(cfg.dt_max),
        Method::Rk4 => cfg.dt_init,
    };
    let mut last_rejected = false;
    let mut since_record = 0usize;

    if cfg.steady_state_eps > 0.0 && sys.steady_norm(&ws.k[0]) < cfg.steady_state_eps {
        quiet = 1;
    }

    loop {
        if t >= t_final {
            sol.termination = Termination::Reached;
            break;
        }
        if stats.accepted + stats.rejected >= cfg.max_steps {
            return Err(Error::TooManySteps(cfg.max_steps));
        }
        let remaining = t_final - t;
        let clipped = h >= remaining;
        let step = if clipped { remaining } else { h };

        match cfg.method {
            Method::DormandPrince54 => {
                let attempt = dp_step(sys, t, &y, step, &mut ws, &mut y_new);
                stats.rhs_evals += 6;
                let err = match attempt {
                    Ok(()) => error_norm(&ws.err, &y, &y_new, cfg),
                    Err(Error::NonFinite { .. } | Error::ChartSingular { .. }) => f64::INFINITY,
                    Err(e) => return Err(e),
                };
                if !err.is_finite() || err > 1.0 {
                    stats.rejected += 1;
                    let fac = if err.is_finite() {
                        (0.9 * err.powf(-0.2)).max(0.2)
                    } else {
                        0.2
                    };
                    h = step * fac;
                    last_rejected = true;
                    if h < cfg.dt_min {
                        return Err(if err.is_finite() {
                            Error::StepSizeUnderflow { t, h }
                        } else {
                            Error::NonFinite { t }
                        });
                    }
                    continue;
                }
                let fac_max = if last_rejected { 1.0 } else { 5.0 };
                let fac = if err == 0.0 {
                    fac_max
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, fac_max)
                };
                let proposed = (step * fac).min(cfg.dt_max);
                h = if clipped { h.max(proposed) } else { proposed };
                last_rejected = false;
            }
            Method::Rk4 => {
                rk4_step(sys, t, &y, step, &mut ws, &mut y_new)?;
                stats.rhs_evals += 3;
                if y_new.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite { t });
                }
                sys.rhs(t + step, &y_new, &mut ws.k[6])?;
                stats.rhs_evals += 1;
            }
        }

        let t_prev = t;
        let y_prev = y.clone();
        t = if clipped { t_final } else { t + step };
        if cfg.renormalize_gamma {
            sys.project(&mut y_new);
        }
        std::mem::swap(&mut y, &mut y_new);
        let (k_first, k_rest) = ws.k.split_at_mut(1);
        k_first[0].copy_from_slice(&k_rest[5]);
        stats.accepted += 1;

        if let Some(obs) = hooks.observer.as_mut() {
            obs(t, &y);
        }

        let mut terminal_hit = None;
        for (idx, ev) in hooks.events.iter().enumerate() {
            let g_new = (ev.g)(t, &y);
            let crossed = g_prev[idx] != 0.0 && (g_prev[idx] < 0.0) != (g_new < 0.0)
                || g_new == 0.0 && g_prev[idx] != 0.0;
            if crossed {
                let hit = locate_event(
                    sys,
                    cfg.method,
                    t_prev,
                    &y_prev,
                    t - t_prev,
                    &ev.g,
                    g_prev[idx],
                    &mut stats,
                )?;
                let hit = EventHit { index: idx, ..hit };
                if ev.terminal && terminal_hit.as_ref().is_none_or(|h: &EventHit| hit.t < h.t) {
                    terminal_hit = Some(hit.clone());
                }
                sol.events.push(hit);
            }
            g_prev[idx] = g_new;
        }
        if let Some(hit) = terminal_hit {
            sol.t.push(hit.t);
            sol.y.push(hit.y.clone());
            sol.termination = Termination::Event(hit.index);
            sol.stats = stats;
            return Ok(sol);
        }

        since_record += 1;
        let done_time = t >= t_final;
        if cfg.steady_state_eps > 0.0 && sys.steady_norm(&ws.k[0]) < cfg.steady_state_eps {
            quiet += 1;
        } else {
            quiet = 0;
        }
        let converged = quiet >= STEADY_STEPS;
        let stopped = hooks.stop.as_mut().is_some_and(|s| s(t, &y));
        if since_record >= cfg.stride || done_time || converged || stopped {
            sol.t.push(t);
            sol.y.push(y.clone());
            since_record = 0;
        }
        if converged {
            sol.termination = Termination::Converged;
            break;
        }
        if stopped {
            sol.termination = Termination::Stopped;
            break;
        }
    }
    sol.stats = stats;
    Ok(sol)
}

/// Bisect the step `[t0, t0 + h]` by re-stepping from `(t0, y0)`.
#[allow(clippy::too_many_arguments)]
fn locate_event<S: OdeSystem>(
    sys: &S,
    method: Method,
    t0: f64,
    y0: &[f64],
    h: f64,
    g: &dyn Fn(f64, &[f64]) -> f64,
    g0: f64,
    stats: &mut Stats,
) -> Result<EventHit> {
    let n = y0.len();
    let mut ws = Workspace::new(n);
    let mut out = vec![0.0; n];
    sys.rhs(t0, y0, &mut ws.k[0])?;
    stats.rhs_evals += 1;
    let k0 = ws.k[0].clone();
    let advance = |tau: f64, ws: &mut Workspace, out: &mut Vec<f64>| -> Result<()> {
        ws.k[0].copy_from_slice(&k0);
        match method {
            Method::DormandPrince54 => dp_step(sys, t0, y0, tau, ws, out),
            Method::Rk4 => rk4_step(sys, t0, y0, tau, ws, out),
        }
    };
    let (mut lo, mut hi) = (0.0, h);
    let mut y_hi = None;
    while hi - lo > EVENT_TOL {
        let mid = 0.5 * (lo + hi);
        advance(mid, &mut ws, &mut out)?;
        stats.rhs_evals += 7;
        let gm = g(t0 + mid, &out);
        if gm == 0.0 || (gm < 0.0) != (g0 < 0.0) {
            hi = mid;
            y_hi = Some(out.clone());
        } else {
            lo = mid;
        }
    }
    let y = match y_hi {
        Some(y) => y,
        None => {
            advance(hi, &mut ws, &mut out)?;
            out
        }
    };
    Ok(EventHit {
        index: 0,
        t: t0 + hi,
        y,
    })
}
