//! Scenario runs, sweeps, checks and report files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::bulk::{bulk_integrals, fit_extension_from, FitOptions, HarmonicExtension, PhysicalParams};
use crate::conservation::{
    bottom_flux_rates, contour_integrals, density_sample, drift, green_identity_residual_on,
    weak_form_ledgers, weak_residual_a, weak_residual_b, BottomFlux, BoundaryTraces,
    DensitySample, Drift, FluxIntegrator, Frame, GreenTest, IdentityResidual, WeakKind,
    DRIFT_FLOOR,
};
use crate::dno::{edge_guard, rhs, step_rk4, Rhs, SolverConfig, SurfaceState};
use crate::error::{Error, Result};
use crate::scenario::{OutputKind, Scenario, SweepAxis};

/// Indices of the vorticity densities within `T1..T8`.
pub const VORTICITY_INDICES: [usize; 7] = [1, 2, 3, 4, 5, 6, 8];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Ledger {
    A,
    B,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Check {
    Density { k: usize, balanced: bool },
    VortDensity { slot: usize },
    HamiltonianMatchesT2,
    VorticityEnergy,
    VortReduction,
    Weak { kind: WeakKind, ledger: Ledger, n: u32, ratio: bool },
    Green(&'static str),
    Bulk { k: usize },
    BulkCirculation,
    BulkAreaMass,
    ContourBulkI2,
    EdgeGuard,
}

fn parse_check(id: &str) -> Option<Check> {
    let digit = |s: &str| -> Option<usize> {
        (s.len() == 1).then(|| s.parse().ok()).flatten()
    };
    if let Some(rest) = id.strip_prefix("vT").and_then(|r| r.strip_suffix("_conserved")) {
        let k = digit(rest)?;
        let slot = VORTICITY_INDICES.iter().position(|&v| v == k)?;
        return Some(Check::VortDensity { slot });
    }
    if let Some(rest) = id.strip_prefix('T') {
        if let Some(r) = rest.strip_suffix("_raw_conserved") {
            let k = digit(r).filter(|k| (1..=8).contains(k))?;
            return Some(Check::Density { k, balanced: false });
        }
        if let Some(r) = rest.strip_suffix("_conserved") {
            let k = digit(r).filter(|k| (1..=8).contains(k))?;
            return Some(Check::Density { k, balanced: true });
        }
        return None;
    }
    if let Some(rest) = id.strip_prefix("bulk_I").and_then(|r| r.strip_suffix("_conserved")) {
        let k = digit(rest).filter(|k| (1..=8).contains(k))?;
        return Some(Check::Bulk { k });
    }
    let (base, ratio) = match id.strip_suffix("_ratio") {
        Some(b) => (b, true),
        None => (id, false),
    };
    for (prefix, kind, ledger, lo) in [
        ("weak_A_n", WeakKind::Irrotational, Ledger::A, 0),
        ("weak_B_n", WeakKind::Irrotational, Ledger::B, 0),
        ("vort_weak_A_n", WeakKind::Vorticity, Ledger::A, 1),
        ("vort_weak_B_n", WeakKind::Vorticity, Ledger::B, 1),
    ] {
        if let Some(r) = base.strip_prefix(prefix) {
            let n = digit(r).filter(|n| (lo..=3).contains(n))? as u32;
            return Some(Check::Weak {
                kind,
                ledger,
                n,
                ratio,
            });
        }
    }
    if ratio {
        return None;
    }
    Some(match id {
        "hamiltonian_matches_T2" => Check::HamiltonianMatchesT2,
        "vorticity_energy_conserved" => Check::VorticityEnergy,
        "vort_reduction" => Check::VortReduction,
        "green_idA" => Check::Green("idA"),
        "green_idB" => Check::Green("idB"),
        "green_third" => Check::Green("third_order"),
        "green_xz" => Check::Green("xz_case"),
        "bulk_circulation" => Check::BulkCirculation,
        "bulk_area_mass" => Check::BulkAreaMass,
        "contour_bulk_I2" => Check::ContourBulkI2,
        "edge_guard" => Check::EdgeGuard,
        _ => return None,
    })
}

pub fn is_known_check(id: &str) -> bool {
    parse_check(id).is_some()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub metric: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DriftRow {
    pub name: String,
    pub raw: Drift,
    pub balanced: Drift,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BulkRow {
    pub t: f64,
    pub bulk: [f64; 8],
    pub contour: [f64; 8],
    /// `int eta + h L`
    pub surface_area: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunFailure {
    pub t: f64,
    pub message: String,
    pub numerical: bool,
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub scenario: String,
    pub params: PhysicalParams,
    pub include_vorticity: bool,
    pub densities: Vec<DensitySample>,
    pub fluxes: Vec<BottomFlux>,
    pub drifts: Vec<DriftRow>,
    pub residuals: Vec<IdentityResidual>,
    pub bulk: Vec<BulkRow>,
    pub edge_peak: f64,
    pub wall_clock: Duration,
    pub checks: BTreeMap<String, CheckOutcome>,
    pub failure: Option<RunFailure>,
    pub outputs: Vec<OutputKind>,
}

impl RunReport {
    pub fn all_pass(&self) -> bool {
        self.failure.is_none() && self.checks.values().all(|c| c.pass)
    }

    /// 0 all pass, 1 some check failed, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match &self.failure {
            Some(f) if f.numerical => 3,
            Some(_) => 1,
            None if self.all_pass() => 0,
            None => 1,
        }
    }

    pub fn balanced_irrotational(&self) -> Vec<[f64; 8]> {
        self.densities
            .iter()
            .zip(&self.fluxes)
            .map(|(d, f)| std::array::from_fn(|k| d.irrotational[k] - f.irrotational[k]))
            .collect()
    }

    pub fn balanced_vorticity(&self) -> Vec<[f64; 7]> {
        self.densities
            .iter()
            .zip(&self.fluxes)
            .filter_map(|(d, f)| {
                d.vorticity
                    .map(|v| std::array::from_fn(|k| v[k] - f.vorticity[k]))
            })
            .collect()
    }

    pub fn drift_of(&self, name: &str) -> Option<&DriftRow> {
        self.drifts.iter().find(|d| d.name == name)
    }

    pub fn residuals_for(&self, id: &str, degree: Option<u32>) -> impl Iterator<Item = &IdentityResidual> {
        let id = id.to_string();
        self.residuals
            .iter()
            .filter(move |r| r.id == id && degree.is_none_or(|d| r.degree == d))
    }
}

struct Needs {
    vorticity: bool,
    weak_irr: bool,
    weak_vort: bool,
    ratio: bool,
    green: bool,
    bulk: bool,
}

fn needs(s: &Scenario, checks: &[(String, Check, f64)]) -> Needs {
    let mut n = Needs {
        vorticity: s.params.omega != 0.0 || s.audit.force_vorticity,
        weak_irr: false,
        weak_vort: false,
        ratio: false,
        green: false,
        bulk: s.outputs.contains(&OutputKind::BulkCsv),
    };
    for (_, c, _) in checks {
        match c {
            Check::VortDensity { .. } | Check::VortReduction => n.vorticity = true,
            Check::Weak { kind, ratio, .. } => {
                match kind {
                    WeakKind::Irrotational => n.weak_irr = true,
                    WeakKind::Vorticity => n.weak_vort = true,
                }
                n.ratio |= *ratio;
            }
            Check::Green(_) => n.green = true,
            Check::Bulk { .. }
            | Check::BulkCirculation
            | Check::BulkAreaMass
            | Check::ContourBulkI2 => n.bulk = true,
            _ => {}
        }
    }
    if s.outputs.contains(&OutputKind::ResidualsCsv) {
        n.green = true;
        if s.params.omega == 0.0 {
            n.weak_irr = true;
        }
        if n.vorticity {
            n.weak_vort = true;
        }
    }
    n
}

struct Recorded {
    step: usize,
    state: SurfaceState,
    rhs: Rhs,
    ext: HarmonicExtension,
}

fn density_names() -> Vec<String> {
    let mut names: Vec<String> = (1..=8).map(|k| format!("T{k}")).collect();
    names.extend(VORTICITY_INDICES.iter().map(|k| format!("vT{k}")));
    names
}

/// Integrate a scenario and evaluate its checks.
pub fn run_scenario(s: &Scenario) -> Result<RunReport> {
    s.validate()?;
    let started = Instant::now();
    let grid = s.make_grid()?;
    let params = s.physical_params();
    let config = s.solver_config();
    let state0 = s.initial_state(&grid)?;
    state0.validate(&params).map_err(|e| Error::Validation {
        field: "initial".into(),
        reason: e.to_string(),
    })?;
    let checks: Vec<(String, Check, f64)> = s
        .checks
        .iter()
        .map(|c| (c.id.clone(), parse_check(&c.id).expect("validated"), c.tolerance))
        .collect();
    let need = needs(s, &checks);
    let fit = FitOptions {
        tol: s.audit.fit_tol,
        max_iter: s.audit.fit_max_iter,
        ..FitOptions::default()
    };
    let cadence = s.observer_cadence;
    let record_every = if need.ratio { cadence / 2 } else { cadence };
    let n_steps = s.step_count();

    let mut fluxes = FluxIntegrator::new(config.dt);
    let mut recorded: Vec<Recorded> = Vec::new();
    let mut edge_peak = 0.0f64;
    let mut last_t = state0.t;
    let mut failure = None;

    let outcome = integrate(
        &state0,
        &params,
        &config,
        n_steps,
        fit,
        |step, state, ext| {
            last_t = state.t;
            edge_peak = edge_peak.max(edge_guard(state, &config)?);
            fluxes.push(bottom_flux_rates(state.t, &ext.bottom_trace(), &params));
            if step % record_every == 0 {
                recorded.push(Recorded {
                    step,
                    rhs: rhs(state, &params, &config)?,
                    state: state.clone(),
                    ext: ext.clone(),
                });
            }
            Ok(())
        },
    );
    if let Err(e) = outcome {
        failure = Some(RunFailure {
            t: last_t,
            message: e.to_string(),
            numerical: e.is_numerical(),
        });
    }

    let observed: Vec<&Recorded> = recorded.iter().filter(|r| r.step % cadence == 0).collect();
    let mut densities = Vec::with_capacity(observed.len());
    let mut flux_at = Vec::with_capacity(observed.len());
    for r in &observed {
        let snap = crate::dno::Snapshot {
            step: r.step,
            state: r.state.clone(),
            rhs: r.rhs.clone(),
        };
        densities.push(density_sample(&snap, &params, need.vorticity, s.audit.mean_tolerance)?);
        flux_at.push(fluxes.integral(r.step)?);
    }

    let mut report = RunReport {
        scenario: s.name.clone(),
        params,
        include_vorticity: need.vorticity,
        densities,
        fluxes: flux_at,
        drifts: Vec::new(),
        residuals: Vec::new(),
        bulk: Vec::new(),
        edge_peak,
        wall_clock: Duration::ZERO,
        checks: BTreeMap::new(),
        failure,
        outputs: s.outputs.clone(),
    };
    if report.densities.len() >= 2 {
        report.drifts = drift_rows(&report)?;
    }

    let dt_obs = cadence as f64 * config.dt;
    let frames = |list: &[&Recorded]| -> Vec<(SurfaceState, RealFieldRef, HarmonicExtension)> {
        list.iter()
            .map(|r| (r.state.clone(), r.rhs.eta_t.clone(), r.ext.clone()))
            .collect()
    };
    let coarse = frames(&observed);
    let fine_refs: Vec<&Recorded> = recorded.iter().collect();
    let fine = if need.ratio { frames(&fine_refs) } else { Vec::new() };
    let mut ratio_metrics: BTreeMap<(WeakKind, Ledger, u32), f64> = BTreeMap::new();
    for (kind, wanted, degrees) in [
        (WeakKind::Irrotational, need.weak_irr && params.omega == 0.0, 0..=3u32),
        (WeakKind::Vorticity, need.weak_vort, 1..=3u32),
    ] {
        if !wanted || coarse.len() < 3 {
            continue;
        }
        for n in degrees {
            let (ra, rb) = weak_series(&coarse, dt_obs, n, kind, &params, s.audit.mean_tolerance)?;
            if need.ratio && fine.len() >= 3 {
                let (fa, fb) =
                    weak_series(&fine, dt_obs / 2.0, n, kind, &params, s.audit.mean_tolerance)?;
                ratio_metrics.insert((kind, Ledger::A, n), refinement_ratio(&ra, &fa));
                ratio_metrics.insert((kind, Ledger::B, n), refinement_ratio(&rb, &fb));
            }
            report.residuals.extend(ra);
            report.residuals.extend(rb);
        }
    }

    if need.green {
        for r in &observed {
            let traces = BoundaryTraces::new(&r.ext, &r.state.eta);
            for f in 1..=3u32 {
                for n in 2..=3u32 {
                    report
                        .residuals
                        .push(green_identity_residual_on(&traces, f, GreenTest::Degree(n), r.state.t)?);
                }
            }
            report
                .residuals
                .push(green_identity_residual_on(&traces, 3, GreenTest::Xz, r.state.t)?);
        }
    }

    if need.bulk {
        for r in &observed {
            let bulk = bulk_integrals(&r.ext, &r.state.eta, &params, s.audit.bulk_nz)?;
            let contour = contour_integrals(&r.state, &r.ext, &params);
            report.bulk.push(BulkRow {
                t: r.state.t,
                bulk,
                contour,
                surface_area: r.state.eta.integrate() + params.h * grid.length(),
            });
        }
    }

    for (id, check, tol) in &checks {
        let metric = if report.failure.is_some() {
            None
        } else {
            check_metric(&report, *check, &ratio_metrics)
        };
        let pass = metric.is_some_and(|m| m <= *tol);
        report.checks.insert(
            id.clone(),
            CheckOutcome {
                metric,
                tolerance: *tol,
                pass,
            },
        );
    }
    report.wall_clock = started.elapsed();
    Ok(report)
}

type RealFieldRef = crate::grid::RealField;

fn weak_series(
    frames: &[(SurfaceState, RealFieldRef, HarmonicExtension)],
    dt: f64,
    n: u32,
    kind: WeakKind,
    params: &PhysicalParams,
    mean_tolerance: f64,
) -> Result<(Vec<IdentityResidual>, Vec<IdentityResidual>)> {
    let fr: Vec<Frame<'_>> = frames
        .iter()
        .map(|(s, e, x)| Frame {
            state: s,
            eta_t: e,
            ext: x,
        })
        .collect();
    let ledgers = weak_form_ledgers(&fr, dt, n, kind, params, mean_tolerance)?;
    Ok((
        weak_residual_a(&ledgers, dt, kind),
        weak_residual_b(&ledgers, dt, kind),
    ))
}

/// Ratio of the largest coarse defect `|dA/dt - rhs|` to the largest fine
/// defect over the times both series share. The normalisation depends on the
/// observer spacing, so the raw defect is compared. A coarse residual already
/// at roundoff has no truncation error to resolve and counts as a ratio of 4.
fn refinement_ratio(coarse: &[IdentityResidual], fine: &[IdentityResidual]) -> f64 {
    let times: Vec<f64> = coarse.iter().map(|r| r.t).collect();
    if coarse.iter().all(|r| r.residual <= ROUNDOFF_RESIDUAL) {
        return 4.0;
    }
    let c = coarse.iter().fold(0.0f64, |m, r| m.max(r.residual * r.scale));
    let f = fine
        .iter()
        .filter(|r| times.iter().any(|t| (t - r.t).abs() < 1e-9))
        .fold(0.0f64, |m, r| m.max(r.residual * r.scale));
    if f == 0.0 {
        f64::INFINITY
    } else {
        c / f
    }
}

/// Normalised weak-form residual treated as exact.
pub const ROUNDOFF_RESIDUAL: f64 = 1e-12;

fn drift_rows(report: &RunReport) -> Result<Vec<DriftRow>> {
    let names = density_names();
    let mut rows = Vec::new();
    let bal = report.balanced_irrotational();
    for k in 0..8 {
        let raw: Vec<f64> = report.densities.iter().map(|d| d.irrotational[k]).collect();
        let b: Vec<f64> = bal.iter().map(|v| v[k]).collect();
        rows.push(DriftRow {
            name: names[k].clone(),
            raw: drift(&raw)?,
            balanced: drift(&b)?,
        });
    }
    if report.include_vorticity {
        let bal = report.balanced_vorticity();
        for k in 0..7 {
            let raw: Vec<f64> = report
                .densities
                .iter()
                .filter_map(|d| d.vorticity.map(|v| v[k]))
                .collect();
            let b: Vec<f64> = bal.iter().map(|v| v[k]).collect();
            rows.push(DriftRow {
                name: names[8 + k].clone(),
                raw: drift(&raw)?,
                balanced: drift(&b)?,
            });
        }
    }
    let h: Vec<f64> = report.densities.iter().map(|d| d.hamiltonian).collect();
    let e: Vec<f64> = report.densities.iter().map(|d| d.vorticity_energy).collect();
    for (name, series) in [("H", h), ("E_vort", e)] {
        let d = drift(&series)?;
        rows.push(DriftRow {
            name: name.into(),
            raw: d,
            balanced: d,
        });
    }
    Ok(rows)
}

fn max_of(values: impl Iterator<Item = f64>) -> Option<f64> {
    values.fold(None, |m, v| Some(m.map_or(v, |m: f64| if v > m || v.is_nan() { v } else { m })))
}

fn check_metric(
    r: &RunReport,
    check: Check,
    ratios: &BTreeMap<(WeakKind, Ledger, u32), f64>,
) -> Option<f64> {
    match check {
        Check::Density { k, balanced } => {
            let row = r.drift_of(&format!("T{k}"))?;
            Some(if balanced { row.balanced.relative } else { row.raw.relative })
        }
        Check::VortDensity { slot } => {
            let row = r.drift_of(&format!("vT{}", VORTICITY_INDICES[slot]))?;
            Some(row.balanced.relative)
        }
        Check::HamiltonianMatchesT2 => {
            let scale = max_of(r.densities.iter().map(|d| d.irrotational[1].abs()))?;
            let diff = max_of(
                r.densities
                    .iter()
                    .map(|d| (d.hamiltonian - d.irrotational[1]).abs()),
            )?;
            Some(diff / scale.max(DRIFT_FLOOR))
        }
        Check::VorticityEnergy => Some(r.drift_of("E_vort")?.raw.relative),
        Check::VortReduction => max_of(r.densities.iter().filter_map(|d| {
            let v = d.vorticity?;
            max_of(
                VORTICITY_INDICES
                    .iter()
                    .zip(v)
                    .map(|(&k, vk)| (vk - d.irrotational[k - 1]).abs()),
            )
        })),
        Check::Weak {
            kind,
            ledger,
            n,
            ratio,
        } => {
            if ratio {
                return ratios.get(&(kind, ledger, n)).map(|q| (q - 4.0).abs());
            }
            let (a, b) = kind.ids();
            let id = if ledger == Ledger::A { a } else { b };
            max_of(r.residuals_for(id, Some(n)).map(|x| x.residual))
        }
        Check::Green(id) => max_of(r.residuals_for(id, None).map(|x| x.residual)),
        Check::Bulk { k } => {
            let series: Vec<f64> = r.bulk.iter().map(|b| b.bulk[k - 1]).collect();
            drift(&series).ok().map(|d| d.relative)
        }
        Check::BulkCirculation => {
            let w = r.params.omega;
            max_of(r.bulk.iter().map(|b| {
                (b.bulk[6] - w * b.bulk[2]).abs() / (w * b.bulk[2]).abs().max(1.0)
            }))
        }
        Check::BulkAreaMass => max_of(r.bulk.iter().map(|b| (b.bulk[2] - b.surface_area).abs())),
        Check::ContourBulkI2 => {
            if r.bulk.is_empty() {
                return None;
            }
            let last = r.bulk.len() - 1;
            max_of(
                [0, last / 2, last]
                    .into_iter()
                    .map(|i| (r.bulk[i].contour[1] - r.bulk[i].bulk[1]).abs()),
            )
        }
        Check::EdgeGuard => Some(r.edge_peak),
    }
}

/// Step `n_steps` times, fitting the harmonic extension at every state.
fn integrate(
    state0: &SurfaceState,
    params: &PhysicalParams,
    config: &SolverConfig,
    n_steps: usize,
    fit: FitOptions,
    mut visit: impl FnMut(usize, &SurfaceState, &HarmonicExtension) -> Result<()>,
) -> Result<()> {
    params.validate()?;
    config.validate()?;
    let mut state = state0.clone();
    let mut ext = fit_extension_from(&state.eta, &state.q, params.h, fit, None)?;
    visit(0, &state, &ext)?;
    for step in 1..=n_steps {
        state = step_rk4(&state, params, config)?;
        state.t = state0.t + step as f64 * config.dt;
        ext = fit_extension_from(&state.eta, &state.q, params.h, fit, Some(&ext))?;
        visit(step, &state, &ext)?;
    }
    Ok(())
}

/// Scenarios a sweep runs, in input order. When the axis is `omega` the
/// run at zero also evaluates the vorticity densities and checks that they
/// reduce to the irrotational ones.
pub fn sweep_scenarios(base: &Scenario, axis: SweepAxis, values: &[f64]) -> Vec<Scenario> {
    values
        .iter()
        .map(|&v| {
            let mut s = base.with_param(axis, v);
            s.name = format!("{}_{}_{}", base.name, axis.name(), format_value(v));
            if axis == SweepAxis::Omega && v == 0.0 {
                s.audit.force_vorticity = true;
                if !s.checks.iter().any(|c| c.id == "vort_reduction") {
                    s.checks.push(crate::scenario::CheckEntry {
                        id: "vort_reduction".into(),
                        tolerance: 1e-12,
                    });
                }
            }
            s
        })
        .collect()
}

fn format_value(v: f64) -> String {
    format!("{v}").replace('-', "m")
}

/// Run every sweep scenario on its own thread; results come back in input order.
pub fn sweep(base: &Scenario, axis: SweepAxis, values: &[f64]) -> Result<Vec<Result<RunReport>>> {
    if values.is_empty() {
        return Err(Error::Validation {
            field: "values".into(),
            reason: "need at least one value".into(),
        });
    }
    let scenarios = sweep_scenarios(base, axis, values);
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    let mut out: Vec<Option<Result<RunReport>>> = (0..scenarios.len()).map(|_| None).collect();
    for chunk in scenarios.chunks(workers).zip(out.chunks_mut(workers)) {
        let (batch, slots) = chunk;
        std::thread::scope(|scope| {
            let handles: Vec<_> = batch
                .iter()
                .map(|s| scope.spawn(move || run_scenario(s)))
                .collect();
            for (slot, h) in slots.iter_mut().zip(handles) {
                *slot = Some(h.join().unwrap_or_else(|_| {
                    Err(Error::Validation {
                        field: "sweep".into(),
                        reason: "worker panicked".into(),
                    })
                }));
            }
        });
    }
    Ok(out.into_iter().map(|r| r.expect("every slot filled")).collect())
}

/// Table layout used for emission.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format '{other}' (expected csv or json)")),
        }
    }
}

fn num(v: f64) -> String {
    format!("{v:e}")
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }

    fn json(&self) -> String {
        let rows: Vec<serde_json::Map<String, serde_json::Value>> = self
            .rows
            .iter()
            .map(|r| {
                self.header
                    .iter()
                    .zip(r)
                    .map(|(h, v)| {
                        let val = v
                            .parse::<f64>()
                            .ok()
                            .and_then(serde_json::Number::from_f64)
                            .map_or_else(|| serde_json::Value::String(v.clone()), serde_json::Value::Number);
                        (h.clone(), val)
                    })
                    .collect()
            })
            .collect();
        let mut s = serde_json::to_string_pretty(&rows).expect("rows serialise");
        s.push('\n');
        s
    }
}

pub fn densities_table_header(include_vorticity: bool) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend((1..=8).map(|k| format!("T{k}")));
    h.push("H".into());
    if include_vorticity {
        h.extend(VORTICITY_INDICES.iter().map(|k| format!("vT{k}")));
    }
    h
}

fn densities_table(r: &RunReport) -> Table {
    let rows = r
        .densities
        .iter()
        .map(|d| {
            let mut row = vec![num(d.t)];
            row.extend(d.irrotational.iter().map(|v| num(*v)));
            row.push(num(d.hamiltonian));
            if r.include_vorticity {
                if let Some(v) = d.vorticity {
                    row.extend(v.iter().map(|x| num(*x)));
                }
            }
            row
        })
        .collect();
    Table {
        header: densities_table_header(r.include_vorticity),
        rows,
    }
}

fn residuals_table(r: &RunReport) -> Table {
    Table {
        header: ["t", "identity", "degree", "residual", "scale"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        rows: r
            .residuals
            .iter()
            .map(|x| {
                vec![
                    num(x.t),
                    x.id.clone(),
                    x.degree.to_string(),
                    num(x.residual),
                    num(x.scale),
                ]
            })
            .collect(),
    }
}

fn bulk_table(r: &RunReport) -> Table {
    let mut header = vec!["t".to_string()];
    header.extend((1..=8).map(|k| format!("I{k}_bulk")));
    header.extend((1..=8).map(|k| format!("I{k}_contour")));
    Table {
        header,
        rows: r
            .bulk
            .iter()
            .map(|b| {
                let mut row = vec![num(b.t)];
                row.extend(b.bulk.iter().chain(&b.contour).map(|v| num(*v)));
                row
            })
            .collect(),
    }
}

fn fluxes_table(r: &RunReport) -> Table {
    let mut header = vec!["t".to_string()];
    header.extend((1..=8).map(|k| format!("T{k}")));
    if r.include_vorticity {
        header.extend(VORTICITY_INDICES.iter().map(|k| format!("vT{k}")));
    }
    Table {
        header,
        rows: r
            .densities
            .iter()
            .zip(&r.fluxes)
            .map(|(d, f)| {
                let mut row = vec![num(d.t)];
                row.extend(f.irrotational.iter().map(|v| num(*v)));
                if r.include_vorticity {
                    row.extend(f.vorticity.iter().map(|v| num(*v)));
                }
                row
            })
            .collect(),
    }
}

/// Summary map `check -> {metric, tolerance, pass}` as pretty JSON.
pub fn summary_json(r: &RunReport) -> String {
    let mut s = serde_json::to_string_pretty(&r.checks).expect("checks serialise");
    s.push('\n');
    s
}

/// Write the scenario's requested outputs into `out_dir`; returns the paths written.
pub fn emit_report(r: &RunReport, format: Format, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| Error::Io { path, source }
    };
    std::fs::create_dir_all(out_dir).map_err(io(out_dir))?;
    let mut kinds = r.outputs.clone();
    kinds.sort();
    kinds.dedup();
    let mut written = Vec::new();
    for kind in kinds {
        let (table, stem) = match kind {
            OutputKind::SummaryJson => {
                let path = out_dir.join(kind.file_name());
                std::fs::write(&path, summary_json(r)).map_err(io(&path))?;
                written.push(path);
                continue;
            }
            OutputKind::DensitiesCsv => (densities_table(r), "densities"),
            OutputKind::ResidualsCsv => (residuals_table(r), "residuals"),
            OutputKind::BulkCsv => (bulk_table(r), "bulk"),
            OutputKind::FluxesCsv => (fluxes_table(r), "fluxes"),
        };
        let (name, body) = match format {
            Format::Csv => (format!("{stem}.csv"), table.csv()),
            Format::Json => (format!("{stem}.json"), table.json()),
        };
        let path = out_dir.join(name);
        std::fs::write(&path, body).map_err(io(&path))?;
        written.push(path);
    }
    Ok(written)
}

/// Human-readable digest of a run for the terminal.
pub fn render_summary(r: &RunReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "scenario {}: {} snapshots, edge peak {:.3e}",
        r.scenario,
        r.densities.len(),
        r.edge_peak
    );
    if let Some(f) = &r.failure {
        let _ = writeln!(out, "  run stopped at t = {}: {}", f.t, f.message);
    }
    for d in &r.drifts {
        let _ = writeln!(
            out,
            "  {:<7} raw drift {:.3e} (rel {:.3e})  balanced {:.3e} (rel {:.3e})",
            d.name, d.raw.max_abs, d.raw.relative, d.balanced.max_abs, d.balanced.relative
        );
    }
    for (id, c) in &r.checks {
        let metric = c.metric.map_or("n/a".to_string(), |m| format!("{m:.3e}"));
        let _ = writeln!(
            out,
            "  [{}] {:<28} {} <= {:.1e}",
            if c.pass { "pass" } else { "FAIL" },
            id,
            metric,
            c.tolerance
        );
    }
    out
}
