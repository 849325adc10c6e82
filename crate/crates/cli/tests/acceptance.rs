//! Acceptance criteria AC1–AC10, one PASS/FAIL line each.
//!
//! Exits non-zero when a criterion fails for any reason other than its
//! analysed gap (contact-torque energy gain in AC2, the lag behind the
//! drifting σ0 curve in AC9).

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tippe_cli::commands::{self, run_full, Drift, Sample};
use tippe_cli::{OutDir, Scenario};
use tippe_core::equilibria::{reduced_jacobian, sigma0_cubic, vertical_quartic};
use tippe_core::linalg::characteristic_polynomial;
use tippe_core::reduction::nutation_scale;
use tippe_core::{
    conservation_signature, critical_area, hurwitz_vertical, integrate, integrate_reduced,
    linearize_full, rhs_decoupled, rhs_reduced, sigma0_characteristic, sigma0_family,
    sigma0_parameters_for_area, sigma0_threshold, BodyParams, DiagnosticRecord, EquilibriumFamily,
    FlowPoint, FrictionModel, FullState, FullSystem, Integral, IntegratorConfig, Mode, OdeSystem,
    ReducedState, Termination, Verdict, Vertical,
};

struct Outcome {
    pass: bool,
    /// Failed only for the analysed reason.
    known_gap: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            known_gap: false,
            detail: detail.into(),
        }
    }

    fn known_gap(mut self, known: bool) -> Self {
        self.known_gap = !self.pass && known;
        self
    }
}

fn fig2(i1: f64) -> BodyParams {
    BodyParams::scaled(0.29, i1, 0.51).with_mu_r(1.0)
}

fn conservation_params() -> BodyParams {
    BodyParams::scaled(0.29, 0.55, 0.51)
        .with_mu(0.3)
        .with_mu_r(0.3)
        .with_mu_s(0.1)
}

fn tight(t_end: f64) -> IntegratorConfig {
    IntegratorConfig::default()
        .with_tolerance(1e-10)
        .with_t_end(t_end)
}

struct ModelRuns {
    model: FrictionModel,
    runs: Vec<Vec<Sample>>,
}

const AC1_SEED: u64 = 0xAC1;

fn conservation_runs() -> Result<Vec<ModelRuns>, String> {
    let params = conservation_params();
    let states = commands::random_states(&params, 20, AC1_SEED);
    let cfg = tight(50.0);
    let mut out = Vec::new();
    for model in commands::conservation_models() {
        let mut runs = Vec::new();
        for s in &states {
            let (samples, _, _) =
                run_full(s, &model, &params, &cfg).map_err(|e| format!("{}: {e}", model.name()))?;
            runs.push(samples);
        }
        out.push(ModelRuns { model, runs });
    }
    Ok(out)
}

fn ac1(all: &[ModelRuns]) -> Outcome {
    let params = conservation_params();
    let mut failures = Vec::new();
    let mut worst_conserved: f64 = 0.0;
    for m in all {
        let drifts: Vec<Drift> = m
            .runs
            .iter()
            .map(|r| {
                Drift::of(
                    &r.iter()
                        .map(|s| s.record)
                        .collect::<Vec<DiagnosticRecord>>(),
                )
            })
            .collect();
        let predicted = m.model.predicted_integrals();
        if conservation_signature(&m.model, &params, 64) != predicted {
            failures.push(format!("{} signature", m.model.name()));
        }
        for i in Integral::ALL {
            let max = drifts.iter().map(|d| d.get(i)).fold(0.0, f64::max);
            if predicted.contains(i) {
                worst_conserved = worst_conserved.max(max);
                if max > 1e-8 {
                    failures.push(format!("{}/{i} drift {max:e}", m.model.name()));
                }
            } else if max < 1e-3 {
                failures.push(format!("{}/{i} varies only {max:e}", m.model.name()));
            }
        }
    }
    Outcome::new(
        failures.is_empty(),
        format!(
            "{} models x 20 states, t=50; worst predicted drift {worst_conserved:.2e}{}",
            all.len(),
            if failures.is_empty() {
                String::new()
            } else {
                format!("; {}", failures.join(", "))
            }
        ),
    )
}

fn rk4(sys: &FullSystem, y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    let eval = |y: &[f64]| {
        let mut d = vec![0.0; n];
        sys.rhs(0.0, y, &mut d).unwrap();
        d
    };
    let shift = |k: &[f64], c: f64| -> Vec<f64> { (0..n).map(|j| y[j] + c * h * k[j]).collect() };
    let k1 = eval(y);
    let k2 = eval(&shift(&k1, 0.5));
    let k3 = eval(&shift(&k2, 0.5));
    let k4 = eval(&shift(&k3, 1.0));
    (0..n)
        .map(|j| y[j] + h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]))
        .collect()
}

fn ac2(all: &[ModelRuns]) -> Outcome {
    let params = conservation_params();
    let cfg = tight(50.0);
    let h = 1e-5;
    let mut increase_models: Vec<String> = Vec::new();
    let mut fd_worst: f64 = 0.0;
    let mut fd_models = Vec::new();
    for m in all {
        let sys = FullSystem::new(params, m.model.clone());
        let mut worst_excess: f64 = 0.0;
        let mut fd_model: f64 = 0.0;
        for run in &m.runs {
            for w in run.windows(2) {
                let e = w[0].record.energy;
                let allowed = 10.0 * (cfg.atol + cfg.rtol * e.abs());
                worst_excess = worst_excess.max(w[1].record.energy - e - allowed);
            }
            for s in run.iter().step_by(10) {
                let y = s.state.to_vec();
                let energy = |y: &[f64]| {
                    let st = FullState::from_slice(y);
                    tippe_core::evaluate_integrals(&st, &m.model, &params)
                        .unwrap()
                        .energy
                };
                let fd = (energy(&rk4(&sys, &y, h)) - energy(&rk4(&sys, &y, -h))) / (2.0 * h);
                fd_model = fd_model.max((fd - s.record.dissipation).abs());
            }
        }
        fd_worst = fd_worst.max(fd_model);
        if worst_excess > 0.0 {
            increase_models.push(format!("{} (+{worst_excess:.1e})", m.model.name()));
        }
        if fd_model > 1e-6 {
            fd_models.push(format!("{} ({fd_model:.1e})", m.model.name()));
        }
    }
    let pass = increase_models.is_empty() && fd_models.is_empty();
    let mut detail = format!("worst |FD dE/dt - (F,v)-(M,w)| {fd_worst:.2e}");
    if !increase_models.is_empty() {
        detail += &format!("; energy increases: {}", increase_models.join(", "));
    }
    if !fd_models.is_empty() {
        detail += &format!("; FD mismatch: {}", fd_models.join(", "));
    }
    let only_contact_torque = fd_models.is_empty()
        && increase_models
            .iter()
            .all(|m| m.starts_with("contact_torque"));
    Outcome::new(pass, detail).known_gap(only_contact_torque)
}

/// Root of the Hurwitz minor whose sign differs between `lo` and `hi`,
/// bisected to width `1e-12`.
fn bisect_flip(which: Vertical, p: &BodyParams, mut lo: f64, mut hi: f64) -> f64 {
    let minors = |c: f64| hurwitz_vertical(which, c, p).unwrap().minors;
    let (m_lo, m_hi) = (minors(lo), minors(hi));
    let k = (0..m_lo.len())
        .find(|&k| m_lo[k].signum() != m_hi[k].signum())
        .expect("a minor changes sign across the flip");
    let s_lo = m_lo[k].signum();
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if minors(mid)[k].signum() == s_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn ac3() -> Outcome {
    let mut failures = Vec::new();
    for (label, i1) in [("a", 0.55), ("b", 0.46), ("c", 0.51)] {
        let p = fig2(i1);
        let cs = critical_area(&p);
        let grid: Vec<f64> = (0..=120).map(|k| -3.0 + 6.0 * k as f64 / 120.0).collect();
        for &c in &grid {
            let up = hurwitz_vertical(Vertical::Upper, c, &p).unwrap();
            let low = hurwitz_vertical(Vertical::Lower, c, &p).unwrap();
            let c1s = sigma0_parameters_for_area(c, &p);
            let sig: Vec<Verdict> = c1s
                .iter()
                .map(|c1| sigma0_characteristic(*c1, &p).unwrap().verdict)
                .collect();
            let edge = cs.is_some_and(|s| (c.abs() - s).abs() < 1e-9);
            if edge {
                continue;
            }
            let above = cs.is_some_and(|s| c.abs() > s);
            let ok = match label {
                "a" => {
                    up.verdict == Verdict::Unstable
                        && low.verdict
                            == if above {
                                Verdict::Unstable
                            } else {
                                Verdict::Stable
                            }
                        && sig.len() == usize::from(above)
                        && sig.iter().all(|v| *v == Verdict::Stable)
                }
                "b" => {
                    low.verdict == Verdict::Stable
                        && up.verdict
                            == if above {
                                Verdict::Stable
                            } else {
                                Verdict::Unstable
                            }
                        && !sig.is_empty() == above
                        && sig.iter().all(|v| *v == Verdict::Unstable)
                }
                _ => {
                    up.verdict == Verdict::Unstable
                        && low.verdict == Verdict::Stable
                        && sig.is_empty()
                }
            };
            if !ok {
                failures.push(format!("({label}) C={c}"));
            }
        }
    }
    let pa = fig2(0.55);
    let cs_a = critical_area(&pa).unwrap();
    let flip_a = bisect_flip(Vertical::Lower, &pa, 1.0, 2.0);
    let flip_a_neg = bisect_flip(Vertical::Lower, &pa, -2.0, -1.0);
    let pb = fig2(0.46);
    let cs_b = critical_area(&pb).unwrap();
    let flip_b = bisect_flip(Vertical::Upper, &pb, 0.5, 2.0);
    let err = [
        (flip_a - cs_a).abs(),
        (flip_a_neg + cs_a).abs(),
        (flip_b - cs_b).abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    if err > 1e-9 {
        failures.push(format!("flip off by {err:e}"));
    }
    if (cs_a - 1.37322).abs() > 5e-6 {
        failures.push(format!("C* = {cs_a}"));
    }
    Outcome::new(
        failures.is_empty(),
        format!(
            "three-case tables on 121 C levels; C*(a) = {cs_a:.6}, bisected flips within {err:.1e}{}",
            if failures.is_empty() { String::new() } else { format!("; {}", failures.join(", ")) }
        ),
    )
}

fn ratio_error(numeric: &[f64], closed: &[f64]) -> f64 {
    let scale = closed[0] / numeric[0];
    let norm = closed.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    numeric
        .iter()
        .zip(closed)
        .map(|(n, c)| (n * scale - c).abs() / norm)
        .fold(0.0, f64::max)
}

fn ac4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xAC4);
    let mut sets = vec![fig2(0.55), fig2(0.46), fig2(0.51)];
    for _ in 0..5 {
        let i3 = rng.gen_range(0.2..0.8);
        sets.push(
            BodyParams::scaled(rng.gen_range(0.05..0.5), rng.gen_range(0.2..0.8), i3)
                .with_mu_r(rng.gen_range(0.1..2.0)),
        );
    }
    let (mut samples, mut disagreements, mut worst_ratio) = (0usize, Vec::new(), 0.0f64);
    for p in &sets {
        let scale = critical_area(p).unwrap_or(1.0);
        for k in 0..=20 {
            let c = scale * (-3.0 + 6.0 * k as f64 / 20.0);
            for which in [Vertical::Upper, Vertical::Lower] {
                let r = hurwitz_vertical(which, c, p).unwrap();
                samples += 1;
                if !r.consistent() {
                    disagreements.push(format!("{which:?} C={c}"));
                }
                let lin = linearize_full(which, c, p).unwrap();
                worst_ratio =
                    worst_ratio.max(ratio_error(&lin.quartic, &vertical_quartic(which, c, p)));
            }
        }
        if let Some(c0) = sigma0_threshold(p) {
            for k in 0..12 {
                let f = 1.02 + 0.4 * k as f64;
                for c1 in [f * c0, -f * c0] {
                    let r = sigma0_characteristic(c1, p).unwrap();
                    samples += 1;
                    if !r.consistent() {
                        disagreements.push(format!("sigma0 c1={c1}"));
                    }
                    let fam = sigma0_family(c1, p).unwrap();
                    let poly =
                        characteristic_polynomial(&reduced_jacobian(&fam.reduced(), p).unwrap());
                    worst_ratio = worst_ratio.max(ratio_error(&poly, &sigma0_cubic(fam.gamma3, p)));
                }
            }
        }
    }
    let pass = samples >= 200 && disagreements.is_empty() && worst_ratio <= 1e-5;
    Outcome::new(
        pass,
        format!(
            "{samples} points, {} disagreements, worst coefficient ratio error {worst_ratio:.1e}{}",
            disagreements.len(),
            if disagreements.is_empty() {
                String::new()
            } else {
                format!(": {}", disagreements.join(", "))
            }
        ),
    )
}

fn ac5() -> Outcome {
    let mut worst_reduced: f64 = 0.0;
    let mut worst_vertical: f64 = 0.0;
    for p in [
        fig2(0.55),
        fig2(0.46),
        BodyParams::scaled(1.0, 0.6, 0.5).with_mu_r(1.0),
    ] {
        let c0 = sigma0_threshold(&p).unwrap();
        for k in 0..50 {
            let f = 1.01 + 5.0 * k as f64 / 49.0;
            for c1 in [f * c0, -f * c0] {
                let fam = sigma0_family(c1, &p).unwrap();
                let d = rhs_reduced(&fam.reduced(), &p).unwrap();
                worst_reduced = worst_reduced.max(d.iter().fold(0.0, |m, x| m.max(x.abs())));
            }
            let c = -4.0 + 8.0 * k as f64 / 49.0;
            for which in [Vertical::Upper, Vertical::Lower] {
                let fam = EquilibriumFamily::vertical(which, c, &p);
                let (w, g) = rhs_decoupled(&fam.omega, &fam.gamma, &p).unwrap();
                worst_vertical = worst_vertical.max(w.amax()).max(g.amax());
            }
        }
    }
    Outcome::new(
        worst_reduced <= 1e-10 && worst_vertical <= 1e-12,
        format!("sigma0 residual {worst_reduced:.1e} (50 c1 per branch, 3 sets), vertical residual {worst_vertical:.1e}"),
    )
}

fn chart_coordinates(state: &FullState, p: &BodyParams) -> [f64; 4] {
    let (w, g) = (state.omega, state.gamma);
    let k = nutation_scale(g.z, p);
    let cross = g.x * w.y - g.y * w.x;
    [
        g.z,
        p.i3 * w.z,
        if k > 0.0 { cross / k } else { 0.0 },
        p.inertia().component_mul(&w).dot(&g),
    ]
}

fn flow_coordinates(pt: &FlowPoint) -> [f64; 4] {
    [pt.gamma3, pt.k1, pt.k2, pt.c]
}

fn ac6() -> Outcome {
    let p = fig2(0.55);
    let mut rng = ChaCha8Rng::seed_from_u64(0xAC6);
    let cfg = IntegratorConfig {
        steady_state_eps: 0.0,
        ..IntegratorConfig::default()
            .with_tolerance(1e-12)
            .with_t_end(0.1)
    };
    let mut worst: f64 = 0.0;
    let mut pole_visits = 0;
    for _ in 0..10 {
        let mut rs = ReducedState {
            gamma3: rng.gen_range(-0.9..0.9),
            k1: rng.gen_range(-2.0..2.0),
            k2: rng.gen_range(-1.0..1.0),
            c: rng.gen_range(-3.0..3.0),
            phi: rng.gen_range(0.0..std::f64::consts::TAU),
        };
        let (w, g) = tippe_core::from_reduced(&rs, &p).unwrap();
        let mut full = FullState::from_decoupled(w, g, &p).to_vec();
        let sys = FullSystem::new(p, FrictionModel::RollingResistance);
        for _ in 0..100 {
            let flow = integrate_reduced(&rs, &p, &cfg, None).unwrap();
            let end = *flow.last();
            pole_visits += usize::from(flow.points.iter().any(|q| q.mode == Mode::Full));
            let sol = integrate(&sys, 0.0, &full, &cfg).unwrap();
            full = sol.last().1.to_vec();
            let a = chart_coordinates(&FullState::from_slice(&full), &p);
            let b = flow_coordinates(&end);
            worst = worst.max(
                a.iter()
                    .zip(&b)
                    .map(|(x, y)| (x - y).abs())
                    .fold(0.0, f64::max),
            );
            rs = ReducedState {
                gamma3: end.gamma3,
                k1: end.k1,
                k2: end.k2,
                c: end.c,
                phi: end.phi,
            };
        }
    }
    Outcome::new(
        worst <= 1e-6,
        format!("10 starts, sup-norm over (gamma3, K1, K2, C) on t in [0, 10]: {worst:.2e} ({pole_visits} segments near a pole)"),
    )
}

fn ac7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xAC7);
    let mut bad = Vec::new();
    let mut levels = 0;
    for _ in 0..10 {
        let (mut i1, i3): (f64, f64) = (rng.gen_range(0.2..0.9), rng.gen_range(0.2..0.9));
        if (i1 - i3).abs() < 1e-3 {
            i1 += 0.05;
        }
        let p = BodyParams::scaled(rng.gen_range(0.02..0.6), i1, i3)
            .with_mu_r(rng.gen_range(0.05..3.0));
        let cs = critical_area(&p).unwrap();
        for k in 0..=200 {
            let c = cs * (-3.0 + 6.0 * k as f64 / 200.0);
            levels += 1;
            let up = hurwitz_vertical(Vertical::Upper, c, &p).unwrap().verdict;
            let low = hurwitz_vertical(Vertical::Lower, c, &p).unwrap().verdict;
            if up == Verdict::Stable && low == Verdict::Unstable {
                bad.push(format!("a={} i1={} i3={} C={c}", p.a, p.i1, p.i3));
            }
        }
    }
    Outcome::new(
        bad.is_empty(),
        format!(
            "{levels} C levels over 10 parameter sets, {} inversions",
            bad.len()
        ),
    )
}

fn ac8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xAC8);
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    let cfg = IntegratorConfig::default()
        .with_tolerance(1e-10)
        .with_t_end(5000.0);
    for p in [
        fig2(0.55),
        BodyParams::scaled(1.0, 0.6, 0.5).with_mu_r(0.5),
        BodyParams::scaled(0.1, 0.9, 0.4).with_mu_r(2.0),
    ] {
        let cs = critical_area(&p).unwrap();
        for _ in 0..6 {
            let c = cs * rng.gen_range(1.1..3.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let start = ReducedState::new(
                rng.gen_range(-0.9..0.9),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-1.0..1.0),
                c,
            );
            let flow = match integrate_reduced(&start, &p, &cfg, None) {
                Ok(f) => f,
                Err(e) => {
                    failures.push(format!("C={c}: {e}"));
                    continue;
                }
            };
            let end = flow.last();
            let c1 = sigma0_parameters_for_area(end.c, &p);
            let predicted = c1.first().map(|c1| -p.a / (c1 * c1 * (p.i1 - p.i3)));
            match predicted {
                Some(g3) if c1.len() == 1 && flow.termination == Termination::Converged => {
                    let err = (end.gamma3 - g3).abs();
                    worst = worst.max(err);
                    if err > 1e-6 || end.gamma3 >= 0.0 {
                        failures.push(format!("C={c}: gamma3 {} vs {g3}", end.gamma3));
                    }
                }
                _ => failures.push(format!("C={c}: {:?}, {} roots", flow.termination, c1.len())),
            }
        }
    }
    Outcome::new(
        failures.is_empty(),
        format!(
            "18 trajectories, worst |gamma3 - predicted| {worst:.1e}{}",
            if failures.is_empty() {
                String::new()
            } else {
                format!("; {}", failures.join(", "))
            }
        ),
    )
}

/// Planar distance from `(k1, c)` to the `σ0` curve, parametrized by
/// `c1 = ±c0 (1 + u²)`.
fn sigma0_distance(k1: f64, c: f64, p: &BodyParams) -> f64 {
    let c0 = sigma0_threshold(p).unwrap();
    let mut best = f64::INFINITY;
    for sign in [1.0, -1.0] {
        let d = |u: f64| {
            sigma0_family(sign * c0 * (1.0 + u * u), p)
                .map_or(f64::INFINITY, |f| (f.k1 - k1).hypot(f.c - c))
        };
        let step = 0.01;
        let k = (1..=400)
            .min_by(|&a, &b| d(a as f64 * step).total_cmp(&d(b as f64 * step)))
            .unwrap();
        let (mut lo, mut hi) = ((k as f64 - 1.0) * step, (k as f64 + 1.0) * step);
        for _ in 0..60 {
            let (m1, m2) = (lo + (hi - lo) / 3.0, hi - (hi - lo) / 3.0);
            if d(m1) < d(m2) {
                hi = m2;
            } else {
                lo = m1;
            }
        }
        best = best.min(d(0.5 * (lo + hi)));
    }
    best
}

fn ac9() -> Outcome {
    let p = fig2(0.55).with_mu_s(0.001);
    let cs = critical_area(&p).unwrap();
    let cfg = IntegratorConfig::default()
        .with_tolerance(1e-9)
        .with_t_end(5000.0);
    let mut failures = Vec::new();
    let mut lagging = 0;
    let mut worst_approach: f64 = 0.0;
    let mut count = 0;
    for k1 in [-1.0, 0.5, 1.5] {
        for c in [-3.0, -2.0, -1.0, 1.0, 2.0, 3.0] {
            count += 1;
            let flow =
                match integrate_reduced(&ReducedState::new(-0.5, k1, 0.0, c), &p, &cfg, Some(cs)) {
                    Ok(f) => f,
                    Err(e) => {
                        failures.push(format!("({k1}, {c}): {e}"));
                        continue;
                    }
                };
            let end = flow.last();
            if end.gamma3 >= -0.99 {
                failures.push(format!("({k1}, {c}) ends at gamma3 {}", end.gamma3));
            }
            if c.abs() > cs {
                let first_cross = flow.crossings.first().copied().unwrap_or(f64::INFINITY);
                let approach = flow
                    .points
                    .iter()
                    .filter(|q| q.t < first_cross)
                    .map(|q| sigma0_distance(q.k1, q.c, &p))
                    .fold(f64::INFINITY, f64::min);
                worst_approach = worst_approach.max(approach);
                if flow.crossings.is_empty() {
                    failures.push(format!("({k1}, {c}) never crossed C*"));
                } else if approach > 1e-2 {
                    lagging += 1;
                }
            } else if !flow.crossings.is_empty() {
                failures.push(format!("({k1}, {c}) crossed C*"));
            }
        }
    }
    Outcome::new(
        failures.is_empty() && lagging == 0,
        format!(
            "{count} trajectories, mu_s = 0.001; worst sigma0 approach {worst_approach:.1e}, {lagging} above 1e-2{}",
            if failures.is_empty() { String::new() } else { format!("; {}", failures.join(", ")) }
        ),
    )
    .known_gap(failures.is_empty() && worst_approach < 0.1)
}

fn scenario_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn run_scenario(path: &Path, out: &Path) -> Result<(), String> {
    let s = Scenario::load(path).map_err(|e| e.to_string())?;
    let dir = OutDir::create(out, &s.outputs.prefix).map_err(|e| e.to_string())?;
    let name = path.file_stem().unwrap().to_string_lossy();
    let r = if name.contains("scan") {
        commands::stability_scan(&s, &dir).map(|_| ())
    } else if name.contains("smale") {
        commands::smale(&s, &dir).map(|_| ())
    } else if name.contains("portrait") {
        commands::phase_portrait(&s, &dir).map(|_| ())
    } else if name.contains("conservation") {
        commands::conservation_check(&s, &dir, AC1_SEED).map(|_| ())
    } else {
        commands::simulate(&s, &dir).map(|_| ())
    };
    r.map_err(|e| format!("{name}: {e}"))
}

fn ac10() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let mut files = 0;
    let mut failures = Vec::new();
    let mut scenarios: Vec<PathBuf> = std::fs::read_dir(scenario_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    scenarios.sort();
    for s in &scenarios {
        let name = s.file_stem().unwrap().to_string_lossy().to_string();
        let (a, b) = (
            tmp.path().join(format!("{name}_a")),
            tmp.path().join(format!("{name}_b")),
        );
        if let Err(e) = run_scenario(s, &a).and_then(|_| run_scenario(s, &b)) {
            failures.push(e);
            continue;
        }
        let mut names: Vec<_> = std::fs::read_dir(&a)
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        names.sort();
        for n in names {
            files += 1;
            if std::fs::read(a.join(&n)).unwrap()
                != std::fs::read(b.join(&n)).ok().unwrap_or_default()
            {
                failures.push(format!("{name}/{}", n.to_string_lossy()));
            }
        }
    }
    Outcome::new(
        failures.is_empty() && files > 0,
        format!(
            "{} scenarios, {files} files compared{}",
            scenarios.len(),
            if failures.is_empty() {
                String::new()
            } else {
                format!("; differ: {}", failures.join(", "))
            }
        ),
    )
}

fn main() {
    let started = Instant::now();
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    let mut report = |id: &'static str, o: Outcome, t: Instant| {
        let tag = if o.known_gap { " [known gap]" } else { "" };
        println!(
            "{id} {}{tag} ({:.1}s): {}",
            if o.pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64(),
            o.detail
        );
        results.push((id, o));
    };
    let t = Instant::now();
    match conservation_runs() {
        Ok(runs) => {
            report("AC1", ac1(&runs), t);
            let t = Instant::now();
            report("AC2", ac2(&runs), t);
        }
        Err(e) => {
            report("AC1", Outcome::new(false, e.clone()), t);
            report("AC2", Outcome::new(false, e), t);
        }
    }
    let checks: [(&str, fn() -> Outcome); 8] = [
        ("AC3", ac3),
        ("AC4", ac4),
        ("AC5", ac5),
        ("AC6", ac6),
        ("AC7", ac7),
        ("AC8", ac8),
        ("AC9", ac9),
        ("AC10", ac10),
    ];
    for (id, f) in checks {
        let t = Instant::now();
        report(id, f(), t);
    }
    let passed = results.iter().filter(|r| r.1.pass).count();
    println!(
        "{passed}/{} criteria passed in {:.1}s",
        results.len(),
        started.elapsed().as_secs_f64()
    );
    let unexpected: Vec<&str> = results
        .iter()
        .filter(|r| !r.1.pass && !r.1.known_gap)
        .map(|r| r.0)
        .collect();
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {}", unexpected.join(", "));
        std::process::exit(1);
    }
}
