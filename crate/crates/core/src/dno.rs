//! Dirichlet–Neumann operator, surface evolution equations and RK4 stepping.

use num_complex::Complex64;

use crate::bulk::{vertical_symbol, PhysicalParams};
use crate::error::{Error, Result};
use crate::grid::RealField;

/// Largest supported truncation order of the operator expansion.
pub const MAX_DNO_ORDER: u32 = 8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    pub dno_order: u32,
    pub dt: f64,
    pub dealias: bool,
    pub edge_guard_threshold: f64,
    pub edge_guard_fraction: f64,
    pub mean_tolerance: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dno_order: 4,
            dt: 2.5e-3,
            dealias: true,
            edge_guard_threshold: 1e-10,
            edge_guard_fraction: 0.125,
            mean_tolerance: 1e-10,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::param("dt", format!("must be positive, got {}", self.dt)));
        }
        if self.dno_order > MAX_DNO_ORDER {
            return Err(Error::param(
                "dno_order",
                format!("must be in 0..={MAX_DNO_ORDER}, got {}", self.dno_order),
            ));
        }
        if !(self.edge_guard_threshold > 0.0) {
            return Err(Error::param("edge_guard_threshold", "must be positive"));
        }
        if !(self.edge_guard_fraction > 0.0 && self.edge_guard_fraction < 0.5) {
            return Err(Error::param("edge_guard_fraction", "must lie in (0, 0.5)"));
        }
        if !(self.mean_tolerance > 0.0) {
            return Err(Error::param("mean_tolerance", "must be positive"));
        }
        Ok(())
    }

    fn product(&self, f: RealField) -> RealField {
        if self.dealias {
            f.dealias()
        } else {
            f
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceState {
    pub t: f64,
    pub eta: RealField,
    pub q: RealField,
}

impl SurfaceState {
    pub fn new(t: f64, eta: RealField, q: RealField) -> Result<Self> {
        eta.same_grid(&q)?;
        Ok(Self { t, eta, q })
    }

    /// Checks that depend on the physics: surface above the bottom and, when
    /// `omega != 0`, zero mean elevation.
    pub fn validate(&self, params: &PhysicalParams) -> Result<()> {
        let max_eta = self.eta.max_abs();
        if max_eta >= params.h {
            return Err(Error::SurfaceBelowBottom {
                max_eta,
                depth: params.h,
            });
        }
        if params.omega != 0.0 {
            let mean = self.eta.mean();
            let allowed = 1e-10 * max_eta.max(1.0);
            if mean.abs() > allowed {
                return Err(Error::NonZeroMean { mean, allowed });
            }
        }
        Ok(())
    }
}

fn apply_vertical(f: &RealField, m: u32, h: f64) -> RealField {
    f.apply_symbol(|k, _| Complex64::new(vertical_symbol(m, k, h), 0.0))
}

/// `G(eta) q` truncated at `order` in the expansion about the flat surface,
/// with every product dealiased.
pub fn dno_apply(eta: &RealField, q: &RealField, h: f64, order: u32) -> Result<RealField> {
    dno_apply_with(eta, q, h, order, true)
}

pub fn dno_apply_with(
    eta: &RealField,
    q: &RealField,
    h: f64,
    order: u32,
    dealias: bool,
) -> Result<RealField> {
    eta.same_grid(q)?;
    if order > MAX_DNO_ORDER {
        return Err(Error::param(
            "dno_order",
            format!("must be in 0..={MAX_DNO_ORDER}, got {order}"),
        ));
    }
    let d = |f: RealField| if dealias { f.dealias() } else { f };
    let order = order as usize;
    // eta^m / m!
    let mut powers = vec![eta.grid().constant(1.0)];
    for m in 1..=order + 1 {
        let next = powers[m - 1].zip_map(eta, |p, e| p * e / m as f64);
        powers.push(next);
    }
    let powers_x: Vec<RealField> = powers.iter().map(|p| p.dx()).collect();

    // psi_j: flat-surface traces of the successive corrections.
    let mut psi = vec![q.clone()];
    for j in 1..=order {
        let mut acc = eta.grid().zeros();
        for m in 1..=j {
            acc = &acc - &d(&powers[m] * &apply_vertical(&psi[j - m], m as u32, h));
        }
        psi.push(acc);
    }

    let mut out = eta.grid().zeros();
    for j in 0..=order {
        for m in 0..=j {
            out = &out + &d(&powers[m] * &apply_vertical(&psi[j - m], m as u32 + 1, h));
        }
        for m in 0..j {
            let inner = apply_vertical(&psi[j - 1 - m], m as u32, h).dx();
            out = &out - &d(&powers_x[m + 1] * &inner);
        }
    }
    Ok(out)
}

/// Tangential and normal-ish surface velocities: `X = phi_x`, `Z = phi_z` at `z = eta`.
pub fn surface_velocities(eta: &RealField, q: &RealField, gq: &RealField) -> (RealField, RealField) {
    let ex = eta.dx();
    let qx = q.dx();
    let num = gq + &(&ex * &qx);
    let z = num.zip_map(&ex, |n, e| n / (1.0 + e * e));
    let x = &qx - &(&ex * &z);
    (x, z)
}

/// `sigma eta_xx (1 + eta_x^2)^(-3/2)`, dealiased.
pub fn surface_tension_term(eta: &RealField, sigma: f64) -> RealField {
    if sigma == 0.0 {
        return eta.grid().zeros();
    }
    let ex = eta.dx();
    let exx = eta.derivative(2).expect("order 2 is supported");
    exx.zip_map(&ex, |a, b| sigma * a * (1.0 + b * b).powf(-1.5))
        .dealias()
}

/// Time derivatives at a state, with the operator output they were built from.
#[derive(Clone, Debug, PartialEq)]
pub struct Rhs {
    pub eta_t: RealField,
    pub q_t: RealField,
    pub gq: RealField,
}

/// Largest `|eta|`, `|q|` in the outer bands; errors above the threshold.
pub fn edge_guard(state: &SurfaceState, config: &SolverConfig) -> Result<f64> {
    let grid = state.eta.grid();
    let mut peak = 0.0f64;
    for (name, f) in [("eta", &state.eta), ("q", &state.q)] {
        for j in grid.edge_indices(config.edge_guard_fraction) {
            let v = f.samples()[j].abs();
            if v > config.edge_guard_threshold {
                return Err(Error::EdgeGuard {
                    field: name,
                    x: grid.node(j),
                    magnitude: v,
                    threshold: config.edge_guard_threshold,
                });
            }
            peak = peak.max(v);
        }
    }
    Ok(peak)
}

fn rhs_common(
    state: &SurfaceState,
    params: &PhysicalParams,
    config: &SolverConfig,
    omega: f64,
) -> Result<Rhs> {
    edge_guard(state, config)?;
    let eta = &state.eta;
    let q = &state.q;
    let gq = dno_apply_with(eta, q, params.h, config.dno_order, config.dealias)?;
    let ex = eta.dx();
    let qx = q.dx();
    let num = &gq + &config.product(&ex * &qx);
    let z = config.product(num.zip_map(&ex, |n, e| n / (1.0 + e * e)));
    let x = &qx - &config.product(&ex * &z);

    let mut eta_t = gq.clone();
    if omega != 0.0 {
        eta_t = eta_t.axpy(omega, &config.product(eta * &ex));
    }
    let energy = x.zip_map(&z, |a, b| a * a + b * b);
    let mut q_t = &config.product(&eta_t * &z) - &config.product(energy).scale(0.5);
    if omega != 0.0 {
        let mean = eta_t.mean();
        if mean.abs() > config.mean_tolerance * eta_t.max_abs() {
            return Err(Error::MassFlux { mean });
        }
        let a = eta_t.antiderivative_from_seam(config.mean_tolerance)?;
        q_t = q_t.axpy(omega, &config.product(eta * &x));
        q_t = q_t.axpy(-0.5 * omega * omega, &config.product(eta * eta));
        q_t = q_t.axpy(omega, &a);
    }
    q_t = q_t.axpy(-params.g, eta);
    if params.sigma != 0.0 {
        q_t = &q_t + &surface_tension_term(eta, params.sigma);
    }
    Ok(Rhs { eta_t, q_t, gq })
}

pub fn rhs_irrotational(
    state: &SurfaceState,
    params: &PhysicalParams,
    config: &SolverConfig,
) -> Result<Rhs> {
    if params.omega != 0.0 {
        return Err(Error::param("omega", "irrotational equations need omega = 0"));
    }
    rhs_common(state, params, config, 0.0)
}

pub fn rhs_constant_vorticity(
    state: &SurfaceState,
    params: &PhysicalParams,
    config: &SolverConfig,
) -> Result<Rhs> {
    rhs_common(state, params, config, params.omega)
}

/// Picks the equations matching `params.omega`.
pub fn rhs(state: &SurfaceState, params: &PhysicalParams, config: &SolverConfig) -> Result<Rhs> {
    if params.omega == 0.0 {
        rhs_irrotational(state, params, config)
    } else {
        rhs_constant_vorticity(state, params, config)
    }
}

/// One classical RK4 step of size `config.dt`.
pub fn step_rk4(
    state: &SurfaceState,
    params: &PhysicalParams,
    config: &SolverConfig,
) -> Result<SurfaceState> {
    step_rk4_by(state, params, config, config.dt)
}

/// One RK4 step of arbitrary (possibly negative) size.
pub fn step_rk4_by(
    state: &SurfaceState,
    params: &PhysicalParams,
    config: &SolverConfig,
    dt: f64,
) -> Result<SurfaceState> {
    let stage = |s: &SurfaceState, idx: usize| -> Result<Rhs> {
        let r = rhs(s, params, config)?;
        if !r.eta_t.is_finite() || !r.q_t.is_finite() {
            return Err(Error::NonFinite { stage: idx, t: s.t });
        }
        Ok(r)
    };
    let shifted = |c: f64, k: &Rhs| SurfaceState {
        t: state.t + c * dt,
        eta: state.eta.axpy(c * dt, &k.eta_t),
        q: state.q.axpy(c * dt, &k.q_t),
    };
    let k1 = stage(state, 1)?;
    let k2 = stage(&shifted(0.5, &k1), 2)?;
    let k3 = stage(&shifted(0.5, &k2), 3)?;
    let k4 = stage(&shifted(1.0, &k3), 4)?;
    let combine = |y: &RealField, a: &RealField, b: &RealField, c: &RealField, d: &RealField| {
        let n = y.len();
        let s = (0..n)
            .map(|j| {
                y.samples()[j]
                    + dt / 6.0
                        * (a.samples()[j]
                            + 2.0 * b.samples()[j]
                            + 2.0 * c.samples()[j]
                            + d.samples()[j])
            })
            .collect();
        RealField::new(y.grid(), s)
    };
    let eta = combine(&state.eta, &k1.eta_t, &k2.eta_t, &k3.eta_t, &k4.eta_t)
        .map_err(|_| Error::NonFinite { stage: 4, t: state.t + dt })?;
    let q = combine(&state.q, &k1.q_t, &k2.q_t, &k3.q_t, &k4.q_t)
        .map_err(|_| Error::NonFinite { stage: 4, t: state.t + dt })?;
    let next = SurfaceState {
        t: state.t + dt,
        eta,
        q,
    };
    next.validate(params)?;
    Ok(next)
}

/// `zeta = q - (omega/2) dx^{-1} eta`; `q` itself when `omega = 0`.
pub fn to_canonical(q: &RealField, eta: &RealField, omega: f64) -> Result<RealField> {
    to_canonical_with(q, eta, omega, 1e-10)
}

pub fn to_canonical_with(
    q: &RealField,
    eta: &RealField,
    omega: f64,
    mean_tolerance: f64,
) -> Result<RealField> {
    q.same_grid(eta)?;
    if omega == 0.0 {
        return Ok(q.clone());
    }
    let a = eta.antiderivative_from_seam(mean_tolerance)?;
    Ok(q.axpy(-0.5 * omega, &a))
}

/// State at an observer sample together with the right-hand side there.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub state: SurfaceState,
    pub rhs: Rhs,
}

/// Number of fixed steps to go from `t0` to `t_end`.
pub fn step_count(t0: f64, t_end: f64, dt: f64) -> Result<usize> {
    if !(t_end > t0) {
        return Err(Error::param("t_end", format!("must exceed the start time {t0}")));
    }
    let n = (t_end - t0) / dt;
    let rounded = n.round();
    if (n - rounded).abs() > 1e-9 * n.max(1.0) {
        return Err(Error::param(
            "t_end",
            format!("(t_end - t0) / dt = {n} is not a whole number of steps"),
        ));
    }
    Ok(rounded as usize)
}

/// Integrate `n_steps` steps. Snapshots are taken at step 0 and every
/// `cadence` steps; `on_step` sees every accepted state, including the first.
pub fn run_steps(
    state0: &SurfaceState,
    params: &PhysicalParams,
    config: &SolverConfig,
    n_steps: usize,
    cadence: usize,
    mut on_step: impl FnMut(usize, &SurfaceState) -> Result<()>,
) -> Result<Vec<Snapshot>> {
    params.validate()?;
    config.validate()?;
    if cadence == 0 {
        return Err(Error::param("observer_cadence", "must be at least 1"));
    }
    state0.validate(params)?;
    let mut snaps = Vec::with_capacity(n_steps / cadence + 1);
    let mut state = state0.clone();
    on_step(0, &state)?;
    snaps.push(Snapshot {
        step: 0,
        rhs: rhs(&state, params, config)?,
        state: state.clone(),
    });
    for step in 1..=n_steps {
        state = step_rk4(&state, params, config)?;
        // Keep t an exact multiple of dt to avoid accumulated rounding.
        state.t = state0.t + step as f64 * config.dt;
        on_step(step, &state)?;
        if step % cadence == 0 {
            snaps.push(Snapshot {
                step,
                rhs: rhs(&state, params, config)?,
                state: state.clone(),
            });
        }
    }
    Ok(snaps)
}

pub fn run(
    state0: &SurfaceState,
    params: &PhysicalParams,
    config: &SolverConfig,
    t_end: f64,
    cadence: usize,
) -> Result<Vec<Snapshot>> {
    let n = step_count(state0.t, t_end, config.dt)?;
    run_steps(state0, params, config, n, cadence, |_, _| Ok(()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bulk::{fit_extension, FitOptions};
    use crate::grid::PeriodicGrid;
    use std::f64::consts::PI;

    fn grid() -> PeriodicGrid {
        PeriodicGrid::new(64, 2.0 * PI * 4.0, -4.0 * PI).unwrap()
    }

    fn loose() -> SolverConfig {
        SolverConfig {
            edge_guard_threshold: f64::INFINITY,
            ..Default::default()
        }
    }

    #[test]
    fn flat_symbol_at_every_order() {
        let g = grid();
        let h = 0.8;
        for order in 0..=MAX_DNO_ORDER {
            for m in [1usize, 3, 10, 21] {
                let k = 2.0 * PI * m as f64 / g.length();
                let q = g.from_fn(|x| (k * x).cos());
                let out = dno_apply(&g.zeros(), &q, h, order).unwrap();
                let expect = q.scale(k * (k * h).tanh());
                assert!((&out - &expect).max_abs() < 1e-12);
            }
        }
        assert!(dno_apply(&g.zeros(), &g.zeros(), h, 9).is_err());
    }

    #[test]
    fn dno_of_zero_is_zero() {
        let g = grid();
        let eta = g.from_fn(|x| 0.1 * (x / 3.0).cos());
        assert_eq!(dno_apply(&eta, &g.zeros(), 1.0, 4).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn dno_matches_extension_oracle() {
        let g = PeriodicGrid::new(128, 60.0, -30.0).unwrap();
        let h = 1.0;
        let eta = g.from_fn(|x| 0.01 * (-(x / 4.0).powi(2)).exp());
        let q = g.from_fn(|x| 0.02 * (x / 4.0) * (-(x / 4.0).powi(2)).exp());
        let gq = dno_apply(&eta, &q, h, 4).unwrap();
        let opts = FitOptions {
            tol: 1e-14,
            ..Default::default()
        };
        let ext = fit_extension(&eta, &q, h, opts).unwrap();
        let ex = eta.dx();
        let traces = ext.eval_on_curve(&eta);
        let oracle: Vec<f64> = traces
            .iter()
            .zip(ex.samples())
            .map(|(p, e)| p.phi_z - e * p.phi_x)
            .collect();
        let oracle = RealField::new(&g, oracle).unwrap();
        assert!((&gq - &oracle).max_abs() < 1e-6 * oracle.max_abs());
    }

    #[test]
    fn velocity_reconstruction_is_exact() {
        let g = grid();
        let eta = g.from_fn(|x| 0.2 * (x / 4.0).sin() + 0.1 * (3.0 * x / 4.0).cos());
        let q = g.from_fn(|x| (x / 4.0).cos());
        let gq = g.from_fn(|x| 0.3 * (x / 2.0).sin());
        let (xv, zv) = surface_velocities(&eta, &q, &gq);
        let ex = eta.dx();
        let qx = q.dx();
        assert!((&(&xv + &(&ex * &zv)) - &qx).max_abs() < 1e-12);
        assert!((&(&zv - &(&ex * &xv)) - &gq).max_abs() < 1e-12);

        let (xv, zv) = surface_velocities(&g.zeros(), &q, &gq);
        assert!((&xv - &qx).max_abs() < 1e-15);
        assert!((&zv - &gq).max_abs() < 1e-15);
        let (xv, zv) = surface_velocities(&eta, &g.zeros(), &g.zeros());
        assert_eq!((xv.max_abs(), zv.max_abs()), (0.0, 0.0));
    }

    #[test]
    fn surface_tension_small_amplitude() {
        let g = grid();
        assert_eq!(surface_tension_term(&g.from_fn(|x| x.sin()), 0.0).max_abs(), 0.0);
        assert!(surface_tension_term(&g.zeros(), 0.3).max_abs() == 0.0);
        let k = 2.0 / 4.0;
        let a = 1e-4;
        let st = surface_tension_term(&g.from_fn(|x| a * (k * x).cos()), 0.5);
        let lin = g.from_fn(|x| -0.5 * a * k * k * (k * x).cos());
        assert!((&st - &lin).max_abs() < 10.0 * 0.5 * a.powi(3) * k.powi(4));
    }

    #[test]
    fn rest_state_is_fixed_point() {
        let g = grid();
        let s = SurfaceState::new(0.0, g.zeros(), g.zeros()).unwrap();
        for omega in [0.0, 0.7] {
            let p = PhysicalParams {
                omega,
                ..Default::default()
            };
            let r = rhs(&s, &p, &loose()).unwrap();
            assert_eq!(r.eta_t.max_abs() + r.q_t.max_abs(), 0.0);
            let next = step_rk4(&s, &p, &loose()).unwrap();
            assert_eq!(next.eta, s.eta);
            assert_eq!(next.q, s.q);
        }
    }

    #[test]
    fn linear_mode_rhs() {
        let g = grid();
        let k = 3.0 / 4.0;
        let a = 1e-8;
        let s = SurfaceState::new(0.0, g.from_fn(|x| a * (k * x).cos()), g.zeros()).unwrap();
        let p = PhysicalParams::default();
        let r = rhs_irrotational(&s, &p, &loose()).unwrap();
        assert!(r.eta_t.max_abs() < 1e-20);
        let expect = g.from_fn(|x| -a * (k * x).cos());
        assert!((&r.q_t - &expect).max_abs() < 1e-22);
    }

    #[test]
    fn vorticity_reduces_to_irrotational() {
        let g = grid();
        let eta = g.from_fn(|x| 0.05 * (x / 4.0).cos() + 0.02 * (x / 2.0).sin());
        let q = g.from_fn(|x| 0.1 * (x / 4.0).sin());
        let s = SurfaceState::new(0.0, eta, q).unwrap();
        let p = PhysicalParams::default();
        let a = rhs_irrotational(&s, &p, &loose()).unwrap();
        let b = rhs_constant_vorticity(&s, &p, &loose()).unwrap();
        assert_eq!(a, b);
        let shear = PhysicalParams { omega: 1.0, ..p };
        assert!(rhs_irrotational(&s, &shear, &loose()).is_err());
    }

    #[test]
    fn vorticity_rhs_has_zero_mean_eta_t() {
        let g = PeriodicGrid::new(128, 60.0, -30.0).unwrap();
        let eta = g.from_fn(|x| {
            let s = x / 4.0;
            0.02 * (1.0 + s - 2.0 * s * s) * (-s * s).exp()
        });
        let q = g.from_fn(|x| 0.01 * (1.0 + x / 4.0) * (-(x / 4.0).powi(2)).exp());
        let s = SurfaceState::new(0.0, eta, q).unwrap();
        let p = PhysicalParams {
            omega: 0.5,
            ..Default::default()
        };
        let r = rhs(&s, &p, &SolverConfig::default()).unwrap();
        assert!(r.eta_t.mean().abs() < 1e-14 * r.eta_t.max_abs());
    }

    #[test]
    fn canonical_variable() {
        let g = PeriodicGrid::new(16, 2.0 * PI, -PI).unwrap();
        let q = g.from_fn(|x| x.sin());
        assert_eq!(to_canonical(&q, &g.constant(1.0), 0.0).unwrap(), q);
        let eta = g.from_fn(|x| (2.0 * x).cos());
        let zeta = to_canonical(&g.zeros(), &eta, 2.0).unwrap();
        let expect = g.from_fn(|x| -(2.0 * x).sin() / 2.0);
        assert!((&zeta - &expect).max_abs() < 1e-14);
        let zeta = to_canonical(&q, &eta, 0.7).unwrap();
        let back = zeta.axpy(0.35, &eta.antiderivative_from_seam(1e-10).unwrap());
        assert!((&back - &q).max_abs() < 1e-12);
    }

    #[test]
    fn edge_guard_reports_location() {
        let g = PeriodicGrid::new(64, 64.0, -32.0).unwrap();
        let eta = g.from_fn(|x| if x > 30.0 { 1e-6 } else { 0.0 });
        let s = SurfaceState::new(0.0, eta, g.zeros()).unwrap();
        match edge_guard(&s, &SolverConfig::default()) {
            Err(Error::EdgeGuard { field, x, .. }) => {
                assert_eq!(field, "eta");
                assert!(x > 30.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn zero_steps_returns_initial_snapshot() {
        let g = grid();
        let s = SurfaceState::new(0.0, g.zeros(), g.zeros()).unwrap();
        let out = run_steps(&s, &PhysicalParams::default(), &loose(), 0, 1, |_, _| Ok(())).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].state, s);
    }

    #[test]
    fn step_count_rules() {
        assert_eq!(step_count(0.0, 10.0, 2.5e-3).unwrap(), 4000);
        assert!(step_count(0.0, 1.0, 0.3).is_err());
        assert!(step_count(1.0, 1.0, 0.1).is_err());
    }
}
