//! The five subcommands. Each returns the JSON summary it wrote so callers
//! (tests, the acceptance harness) can inspect results without reparsing.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use tippe_core::dynamics::resolved_friction;
use tippe_core::{
    conservation_signature, critical_area, hurwitz_vertical, integrate, integrate_reduced,
    rhs_general, sigma0_characteristic, sigma0_family, sigma0_parameters_for_area,
    sigma0_threshold, BodyParams, DiagnosticRecord, FamilyKind, FlowSolution, FrictionModel,
    FullState, FullSystem, Integral, IntegralSet, IntegratorConfig, ReducedState, StabilityReport,
    Stats, Termination, Verdict, Vertical,
};

use crate::error::CliError;
use crate::output::{write_json, Cell, OutDir, Table};
use crate::scenario::{ConservationConfig, Grid, PortraitConfig, Scenario, SmaleConfig, Start};

pub const TRAJECTORY_HEADER: [&str; 14] = [
    "t",
    "gamma1",
    "gamma2",
    "gamma3",
    "omega1",
    "omega2",
    "omega3",
    "E",
    "F",
    "G",
    "C",
    "res_constraint",
    "res_norm",
    "N",
];

fn termination_label(t: &Termination) -> String {
    match t {
        Termination::Reached => "reached".into(),
        Termination::Converged => "converged".into(),
        Termination::Stopped => "stopped".into(),
        Termination::Event(i) => format!("event_{i}"),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FinalState {
    pub t: f64,
    pub v: [f64; 3],
    pub omega: [f64; 3],
    pub gamma: [f64; 3],
    pub gamma3: f64,
    pub k1: f64,
    pub c: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Drift {
    pub energy: f64,
    pub lagrange: f64,
    pub jellett: f64,
    pub area: f64,
    pub res_constraint: f64,
    pub res_norm: f64,
}

impl Drift {
    pub fn of(records: &[DiagnosticRecord]) -> Self {
        let first = records[0];
        let max = |f: &dyn Fn(&DiagnosticRecord) -> f64| records.iter().map(f).fold(0.0, f64::max);
        Self {
            energy: max(&|r| (r.energy - first.energy).abs()),
            lagrange: max(&|r| (r.lagrange - first.lagrange).abs()),
            jellett: max(&|r| (r.jellett - first.jellett).abs()),
            area: max(&|r| (r.area - first.area).abs()),
            res_constraint: max(&|r| r.res_constraint.abs()),
            res_norm: max(&|r| r.res_norm.abs()),
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

#[derive(Debug, Clone, Serialize)]
pub struct SimulateSummary {
    pub model: String,
    pub system: &'static str,
    pub termination: String,
    pub converged: bool,
    pub rows: usize,
    pub final_state: FinalState,
    pub drift: Drift,
    pub min_normal_force: f64,
    pub energy_increase: f64,
    pub switches: Vec<f64>,
    pub area_crossings: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stats: Option<Stats>,
}

/// One sampled point of a trajectory in full-state form.
#[derive(Debug, Clone, Copy)]
pub struct Sample {
    pub t: f64,
    pub state: FullState,
    pub record: DiagnosticRecord,
    pub normal_force: f64,
}

fn sample(
    t: f64,
    state: FullState,
    model: &FrictionModel,
    params: &BodyParams,
) -> Result<Sample, CliError> {
    let friction = resolved_friction(&state, model, params)
        .map_err(|e| CliError::numerical(&format!("t = {t}"), e))?;
    let d = rhs_general(&state, model, params)
        .map_err(|e| CliError::numerical(&format!("t = {t}"), e))?;
    Ok(Sample {
        t,
        state,
        record: DiagnosticRecord::new(t, &state, &friction, params),
        normal_force: d.normal_force,
    })
}

/// Integrates the full system and samples diagnostics at every stored step.
pub fn run_full(
    state: &FullState,
    model: &FrictionModel,
    params: &BodyParams,
    cfg: &IntegratorConfig,
) -> Result<(Vec<Sample>, Termination, Stats), CliError> {
    let sys = FullSystem::new(*params, model.clone());
    let sol = integrate(&sys, 0.0, &state.to_vec(), cfg)
        .map_err(|e| CliError::numerical("full system", e))?;
    let samples = sol
        .t
        .iter()
        .zip(&sol.y)
        .map(|(t, y)| sample(*t, FullState::from_slice(y), model, params))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((samples, sol.termination, sol.stats))
}

pub fn run_reduced(
    start: &ReducedState,
    model: &FrictionModel,
    params: &BodyParams,
    cfg: &IntegratorConfig,
) -> Result<(Vec<Sample>, FlowSolution), CliError> {
    let flow = integrate_reduced(start, params, cfg, critical_area(params))
        .map_err(|e| CliError::numerical("reduced flow", e))?;
    let samples = flow
        .points
        .iter()
        .map(|p| {
            sample(
                p.t,
                FullState::from_decoupled(p.omega, p.gamma, params),
                model,
                params,
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((samples, flow))
}

fn trajectory_table(samples: &[Sample]) -> Table {
    let mut table = Table::new(&TRAJECTORY_HEADER);
    for s in samples {
        let (g, w, r) = (s.state.gamma, s.state.omega, &s.record);
        table.push(vec![
            s.t.into(),
            g.x.into(),
            g.y.into(),
            g.z.into(),
            w.x.into(),
            w.y.into(),
            w.z.into(),
            r.energy.into(),
            r.lagrange.into(),
            r.jellett.into(),
            r.area.into(),
            r.res_constraint.into(),
            r.res_norm.into(),
            s.normal_force.into(),
        ]);
    }
    table
}

/// Largest single-step energy increase along the samples.
pub fn max_energy_increase(samples: &[Sample]) -> f64 {
    samples
        .windows(2)
        .map(|w| w[1].record.energy - w[0].record.energy)
        .fold(0.0, f64::max)
}

pub fn simulate(scenario: &Scenario, out: &OutDir) -> Result<SimulateSummary, CliError> {
    let params = scenario.params;
    let cfg = &scenario.integrator;
    let (samples, system, termination, switches, crossings, stats) = match scenario.start()? {
        Start::Full(state) => {
            let (samples, termination, stats) = run_full(&state, &scenario.model, &params, cfg)?;
            (
                samples,
                "full",
                termination,
                Vec::new(),
                Vec::new(),
                Some(stats),
            )
        }
        Start::Reduced(rs) => {
            let (samples, flow) =
                run_reduced(&rs, &scenario.model, &scenario.decoupled_params(), cfg)?;
            (
                samples,
                "reduced",
                flow.termination,
                flow.switches,
                flow.crossings,
                None,
            )
        }
    };
    trajectory_table(&samples).write(&out.file("trajectory.csv"))?;
    let last = samples.last().expect("at least the initial sample");
    let records: Vec<DiagnosticRecord> = samples.iter().map(|s| s.record).collect();
    let summary = SimulateSummary {
        model: scenario.model.name(),
        system,
        converged: termination == Termination::Converged,
        termination: termination_label(&termination),
        rows: samples.len(),
        final_state: FinalState {
            t: last.t,
            v: last.state.v.into(),
            omega: last.state.omega.into(),
            gamma: last.state.gamma.into(),
            gamma3: last.state.gamma.z,
            k1: last.record.lagrange,
            c: last.record.area,
        },
        drift: Drift::of(&records),
        min_normal_force: samples
            .iter()
            .map(|s| s.normal_force)
            .fold(f64::INFINITY, f64::min),
        energy_increase: max_energy_increase(&samples),
        switches,
        area_crossings: crossings,
        stats,
    };
    write_json(&out.file("summary.json"), &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanSummary {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub critical_area: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma0_threshold: Option<f64>,
    pub rows: usize,
    pub inconsistent: usize,
}

pub const SCAN_HEADER: [&str; 12] = [
    "family",
    "parameter",
    "gamma3",
    "C",
    "verdict",
    "numeric_verdict",
    "condition",
    "d1",
    "d2",
    "d3",
    "d4",
    "max_re",
];

fn default_c_grid(params: &BodyParams) -> Grid {
    match critical_area(params) {
        Some(_) => Grid::Range {
            start: -2.0,
            stop: 2.0,
            count: 41,
            relative: true,
        },
        None => Grid::Range {
            start: -3.0,
            stop: 3.0,
            count: 41,
            relative: false,
        },
    }
}

fn report_row(r: &StabilityReport) -> Vec<Cell> {
    let mut row: Vec<Cell> = vec![
        r.kind.label().into(),
        r.parameter.into(),
        r.gamma3.into(),
        r.c.into(),
        r.verdict.to_string().into(),
        r.numeric_verdict.to_string().into(),
        r.condition.clone().into(),
    ];
    row.extend((0..4).map(|i| {
        r.minors
            .get(i)
            .map_or(Cell::Text(String::new()), |m| Cell::Num(*m))
    }));
    row.push(r.max_real_part().into());
    row
}

/// Reports in grid order: for each `C` the two vertical rotations and every
/// `σ0` member with that area, then the direct `c1` grid.
pub fn stability_reports(
    params: &BodyParams,
    c_values: &[f64],
    c1_values: &[f64],
) -> Result<Vec<StabilityReport>, CliError> {
    let per_c: Vec<Result<Vec<StabilityReport>, CliError>> = c_values
        .par_iter()
        .map(|&c| {
            let mut reports = Vec::new();
            for which in [Vertical::Upper, Vertical::Lower] {
                reports.push(
                    hurwitz_vertical(which, c, params)
                        .map_err(|e| CliError::numerical(&format!("C = {c}"), e))?,
                );
            }
            for c1 in sigma0_parameters_for_area(c, params) {
                reports.push(
                    sigma0_characteristic(c1, params)
                        .map_err(|e| CliError::numerical(&format!("c1 = {c1}"), e))?,
                );
            }
            Ok(reports)
        })
        .collect();
    let direct: Vec<Result<StabilityReport, CliError>> = c1_values
        .par_iter()
        .map(|&c1| {
            sigma0_characteristic(c1, params)
                .map_err(|e| CliError::Validation(format!("scan.c1_grid: {e}")))
        })
        .collect();
    let mut out = Vec::new();
    for r in per_c {
        out.extend(r?);
    }
    for r in direct {
        out.push(r?);
    }
    Ok(out)
}

pub fn stability_scan(scenario: &Scenario, out: &OutDir) -> Result<ScanSummary, CliError> {
    let params = scenario.decoupled_params();
    let scan = scenario
        .scan
        .clone()
        .unwrap_or(crate::scenario::ScanConfig {
            c_grid: None,
            c1_grid: None,
        });
    let c_values = scan
        .c_grid
        .unwrap_or_else(|| default_c_grid(&params))
        .points(critical_area(&params))
        .map_err(|e| CliError::Validation(format!("scan.c_grid: {e}")))?;
    let c1_values = match scan.c1_grid {
        Some(g) => g
            .points(sigma0_threshold(&params))
            .map_err(|e| CliError::Validation(format!("scan.c1_grid: {e}")))?,
        None => Vec::new(),
    };
    let reports = stability_reports(&params, &c_values, &c1_values)?;
    let mut table = Table::new(&SCAN_HEADER);
    for r in &reports {
        table.push(report_row(r));
    }
    table.write(&out.file("stability.csv"))?;
    let summary = ScanSummary {
        critical_area: critical_area(&params),
        sigma0_threshold: sigma0_threshold(&params),
        rows: reports.len(),
        inconsistent: reports.iter().filter(|r| !r.consistent()).count(),
    };
    write_json(&out.file("stability.json"), &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, Serialize)]
pub struct SmaleSummary {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub critical_area: Option<f64>,
    pub rows: usize,
    pub sigma0_rows: usize,
}

pub const SMALE_HEADER: [&str; 6] = ["family", "parameter", "C", "C2", "E", "stable"];

pub fn smale_rows(
    params: &BodyParams,
    cfg: &SmaleConfig,
) -> Result<Vec<(FamilyKind, f64, f64, f64, bool)>, CliError> {
    let c_values = cfg
        .c_grid
        .points(critical_area(params))
        .map_err(|e| CliError::Validation(format!("smale.c_grid: {e}")))?;
    let c1_values = cfg
        .c1_grid
        .points(sigma0_threshold(params))
        .map_err(|e| CliError::Validation(format!("smale.c1_grid: {e}")))?;
    let vertical: Vec<Result<Vec<_>, CliError>> = c_values
        .par_iter()
        .map(|&c| {
            [Vertical::Upper, Vertical::Lower]
                .into_iter()
                .map(|which| {
                    let r = hurwitz_vertical(which, c, params)
                        .map_err(|e| CliError::numerical(&format!("C = {c}"), e))?;
                    let e = tippe_core::family_energy(which.kind(), c, params)
                        .map_err(|e| CliError::numerical("energy", e))?;
                    Ok((which.kind(), c, c, e, r.verdict == Verdict::Stable))
                })
                .collect()
        })
        .collect();
    let permanent: Vec<Result<Vec<_>, CliError>> = c1_values
        .par_iter()
        .map(|&c1| {
            [c1.abs(), -c1.abs()]
                .into_iter()
                .map(|p| {
                    let fam = sigma0_family(p, params)
                        .map_err(|e| CliError::Validation(format!("smale.c1_grid: {e}")))?;
                    let r = sigma0_characteristic(p, params)
                        .map_err(|e| CliError::numerical(&format!("c1 = {p}"), e))?;
                    Ok((
                        FamilyKind::Permanent,
                        p,
                        fam.c,
                        fam.energy,
                        r.verdict == Verdict::Stable,
                    ))
                })
                .collect()
        })
        .collect();
    let mut rows = Vec::new();
    for r in vertical.into_iter().chain(permanent) {
        rows.extend(r?);
    }
    Ok(rows)
}

pub fn smale(scenario: &Scenario, out: &OutDir) -> Result<SmaleSummary, CliError> {
    let params = scenario.decoupled_params();
    let cfg = scenario.smale.clone().unwrap_or_else(|| SmaleConfig {
        c_grid: match critical_area(&params) {
            Some(_) => Grid::Range {
                start: 0.0,
                stop: 3.0,
                count: 61,
                relative: true,
            },
            None => Grid::Range {
                start: 0.0,
                stop: 3.0,
                count: 61,
                relative: false,
            },
        },
        c1_grid: match sigma0_threshold(&params) {
            Some(_) => Grid::Range {
                start: 1.001,
                stop: 6.0,
                count: 100,
                relative: true,
            },
            None => Grid::Values(Vec::new()),
        },
    });
    let rows = smale_rows(&params, &cfg)?;
    let mut table = Table::new(&SMALE_HEADER);
    for (kind, p, c, e, stable) in &rows {
        table.push(vec![
            kind.label().into(),
            (*p).into(),
            (*c).into(),
            (c * c).into(),
            (*e).into(),
            (*stable).into(),
        ]);
    }
    table.write(&out.file("smale.csv"))?;
    let summary = SmaleSummary {
        critical_area: critical_area(&params),
        rows: rows.len(),
        sigma0_rows: rows.iter().filter(|r| r.0 == FamilyKind::Permanent).count(),
    };
    write_json(&out.file("smale.json"), &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, Serialize)]
pub struct PortraitTrajectory {
    pub file: String,
    pub initial: [f64; 4],
    pub final_gamma3: f64,
    pub final_k1: f64,
    pub final_c: f64,
    pub termination: String,
    pub switches: usize,
    pub area_crossings: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PortraitSummary {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub critical_area: Option<f64>,
    pub mu_r: f64,
    pub mu_s: f64,
    pub trajectories: Vec<PortraitTrajectory>,
}

pub fn sigma0_curve(params: &BodyParams, grid: &Grid) -> Result<Table, CliError> {
    let mut table = Table::new(&["c1", "K1", "C", "gamma3"]);
    let Some(c0) = sigma0_threshold(params) else {
        return Ok(table);
    };
    let values = grid
        .points(Some(c0))
        .map_err(|e| CliError::Validation(format!("portrait.sigma0_curve: {e}")))?;
    for sign in [1.0, -1.0] {
        for c1 in &values {
            let Ok(fam) = sigma0_family(sign * c1.abs(), params) else {
                continue;
            };
            table.push(vec![
                fam.parameter.into(),
                fam.k1.into(),
                fam.c.into(),
                fam.gamma3.into(),
            ]);
        }
    }
    Ok(table)
}

pub fn phase_portrait(scenario: &Scenario, out: &OutDir) -> Result<PortraitSummary, CliError> {
    let params = scenario.decoupled_params();
    if !scenario.model.is_decoupled_family() {
        return Err(CliError::Validation(format!(
            "model: `{}` has a sliding force; the portrait needs rolling/spinning resistance",
            scenario.model
        )));
    }
    let cfg: PortraitConfig = scenario.portrait.clone().unwrap_or_default();
    if !(cfg.gamma3.abs() < 1.0) {
        return Err(CliError::Validation(format!(
            "portrait.gamma3: must satisfy |gamma3| < 1, got {}",
            cfg.gamma3
        )));
    }
    let k1s = cfg
        .k1
        .points(None)
        .map_err(|e| CliError::Validation(format!("portrait.k1: {e}")))?;
    let cs = cfg
        .c
        .points(None)
        .map_err(|e| CliError::Validation(format!("portrait.c: {e}")))?;
    let starts: Vec<ReducedState> = k1s
        .iter()
        .flat_map(|&k1| {
            cs.iter()
                .map(move |&c| ReducedState::new(cfg.gamma3, k1, cfg.k2, c))
        })
        .collect();
    let runs: Vec<Result<FlowSolution, CliError>> = starts
        .par_iter()
        .map(|s| {
            integrate_reduced(s, &params, &scenario.integrator, critical_area(&params)).map_err(
                |e| CliError::numerical(&format!("portrait K1 = {}, C = {}", s.k1, s.c), e),
            )
        })
        .collect();
    let mut trajectories = Vec::new();
    for (i, (start, run)) in starts.iter().zip(runs).enumerate() {
        let flow = run?;
        let name = format!("portrait_{i:04}.csv");
        let mut table = Table::new(&["t", "K1", "C", "gamma3"]);
        for p in &flow.points {
            table.push(vec![p.t.into(), p.k1.into(), p.c.into(), p.gamma3.into()]);
        }
        table.write(&out.file(&name))?;
        let last = flow.last();
        trajectories.push(PortraitTrajectory {
            file: name,
            initial: [start.gamma3, start.k1, start.k2, start.c],
            final_gamma3: last.gamma3,
            final_k1: last.k1,
            final_c: last.c,
            termination: termination_label(&flow.termination),
            switches: flow.switches.len(),
            area_crossings: flow.crossings.clone(),
        });
    }
    sigma0_curve(&params, &cfg.sigma0_curve)?.write(&out.file("sigma0_curve.csv"))?;
    let summary = PortraitSummary {
        critical_area: critical_area(&params),
        mu_r: params.mu_r,
        mu_s: params.mu_s,
        trajectories,
    };
    write_json(&out.file("portrait.json"), &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, Serialize)]
pub struct IntegralCheck {
    pub integral: Integral,
    pub predicted: bool,
    pub signature: bool,
    pub max_drift: f64,
    /// `conserved`, `varying` or `inconclusive`.
    pub observed: &'static str,
    pub ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelCheck {
    pub model: String,
    pub predicted: IntegralSet,
    pub signature: IntegralSet,
    pub integrals: Vec<IntegralCheck>,
    pub max_energy_increase: f64,
    pub min_normal_force: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConservationReport {
    pub seed: u64,
    pub t_end: f64,
    pub models: Vec<ModelCheck>,
    pub ok: bool,
}

/// Catalog with the dry-friction regularization widened to `1e-4`, which
/// keeps the sliding-to-rolling transition affordable for long runs.
pub fn conservation_models() -> Vec<FrictionModel> {
    FrictionModel::catalog()
        .into_iter()
        .map(|m| match m {
            FrictionModel::DrySliding { .. } => FrictionModel::DrySliding { epsilon: 1e-4 },
            other => other,
        })
        .collect()
}

/// `count` admissible states drawn from a seeded ChaCha8 stream, keeping
/// only those pressed onto the plane (`N >= 0`) under every catalog model.
pub fn random_states(params: &BodyParams, count: usize, seed: u64) -> Vec<FullState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let models = conservation_models();
    let in_contact = |s: &FullState| {
        models
            .iter()
            .all(|m| rhs_general(s, m, params).is_ok_and(|d| d.normal_force >= 0.0))
    };
    std::iter::repeat_with(|| FullState::random_admissible(&mut rng, params))
        .filter(in_contact)
        .take(count)
        .collect()
}

pub fn check_model(
    model: &FrictionModel,
    params: &BodyParams,
    states: &[FullState],
    integrator: &IntegratorConfig,
    cfg: &ConservationConfig,
) -> Result<ModelCheck, CliError> {
    let runs: Vec<Result<Vec<Sample>, CliError>> = states
        .par_iter()
        .map(|s| run_full(s, model, params, integrator).map(|r| r.0))
        .collect();
    let mut drifts = Vec::new();
    let mut energy_increase: f64 = 0.0;
    let mut min_n = f64::INFINITY;
    for run in runs {
        let samples = run.map_err(|e| CliError::Numerical(format!("{}: {e}", model.name())))?;
        let records: Vec<DiagnosticRecord> = samples.iter().map(|s| s.record).collect();
        drifts.push(Drift::of(&records));
        energy_increase = energy_increase.max(max_energy_increase(&samples));
        min_n = samples.iter().map(|s| s.normal_force).fold(min_n, f64::min);
    }
    let predicted = model.predicted_integrals();
    let signature = conservation_signature(model, params, cfg.signature_samples);
    let integrals: Vec<IntegralCheck> = Integral::ALL
        .iter()
        .map(|&i| {
            let max_drift = drifts.iter().map(|d| d.get(i)).fold(0.0, f64::max);
            let observed = if max_drift <= cfg.conserved_tol {
                "conserved"
            } else if max_drift >= cfg.varying_tol {
                "varying"
            } else {
                "inconclusive"
            };
            let p = predicted.contains(i);
            let ok =
                p == signature.contains(i) && observed == if p { "conserved" } else { "varying" };
            IntegralCheck {
                integral: i,
                predicted: p,
                signature: signature.contains(i),
                max_drift,
                observed,
                ok,
            }
        })
        .collect();
    Ok(ModelCheck {
        model: model.name(),
        predicted,
        signature,
        ok: integrals.iter().all(|c| c.ok),
        integrals,
        max_energy_increase: energy_increase,
        min_normal_force: min_n,
    })
}

pub fn conservation_check(
    scenario: &Scenario,
    out: &OutDir,
    seed: u64,
) -> Result<ConservationReport, CliError> {
    let cfg = scenario.conservation.clone().unwrap_or_default();
    let models = cfg.models.clone().unwrap_or_else(conservation_models);
    let states = random_states(&scenario.params, cfg.samples, seed);
    let mut checks = Vec::new();
    for m in &models {
        checks.push(check_model(
            m,
            &scenario.params,
            &states,
            &scenario.integrator,
            &cfg,
        )?);
    }
    let mut table = Table::new(&[
        "model",
        "integral",
        "predicted",
        "signature",
        "max_drift",
        "observed",
        "ok",
    ]);
    for m in &checks {
        for c in &m.integrals {
            table.push(vec![
                m.model.clone().into(),
                c.integral.to_string().into(),
                c.predicted.into(),
                c.signature.into(),
                c.max_drift.into(),
                c.observed.into(),
                c.ok.into(),
            ]);
        }
    }
    table.write(&out.file("conservation.csv"))?;
    let report = ConservationReport {
        seed,
        t_end: scenario.integrator.t_end,
        ok: checks.iter().all(|m| m.ok),
        models: checks,
    };
    write_json(&out.file("conservation.json"), &report)?;
    if !report.ok {
        let bad: Vec<String> = report
            .models
            .iter()
            .flat_map(|m| {
                m.integrals
                    .iter()
                    .filter(|c| !c.ok)
                    .map(move |c| format!("{}/{}", m.model, c.integral))
            })
            .collect();
        return Err(CliError::Numerical(format!(
            "claimed and observed integrals differ: {}",
            bad.join(", ")
        )));
    }
    Ok(report)
}
