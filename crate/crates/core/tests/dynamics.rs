use std::f64::consts::PI;

use wavelaws::bulk::{bulk_integrals, fit_extension, HarmonicExtension, PhysicalParams};
use wavelaws::conservation::contour_integrals;
use wavelaws::dno::{step_rk4, step_rk4_by, SolverConfig, SurfaceState};
use wavelaws::oracles::{dno_extension_error, linear_dispersion};
use wavelaws::{PeriodicGrid, RealField};

fn loose(dt: f64) -> SolverConfig {
    SolverConfig {
        dt,
        edge_guard_threshold: f64::INFINITY,
        ..SolverConfig::default()
    }
}

fn pulse(grid: &PeriodicGrid, a: f64, qa: f64) -> SurfaceState {
    let eta = grid.from_fn(|x| a * (-(x / 3.0).powi(2)).exp());
    let q = grid.from_fn(|x| qa * (1.0 + x / 3.0) * (-(x / 3.0).powi(2)).exp());
    SurfaceState::new(0.0, eta, q).unwrap()
}

fn advance(mut s: SurfaceState, params: &PhysicalParams, config: &SolverConfig, n: usize) -> SurfaceState {
    for _ in 0..n {
        s = step_rk4(&s, params, config).unwrap();
    }
    s
}

#[test]
fn quadrature_matches_closed_form() {
    // int_0^{2 pi} exp(sin x) dx = 2 pi I0(1)
    let g = PeriodicGrid::new(32, 2.0 * PI, 0.0).unwrap();
    let f = g.from_fn(|x| x.sin().exp());
    assert!((f.integrate() - 2.0 * PI * 1.266_065_877_752_008_4).abs() < 1e-13);
    let g = PeriodicGrid::new(16, 10.0, -3.0).unwrap();
    let x = g.x_field();
    for (j, v) in x.samples().iter().enumerate() {
        assert_eq!(*v, -3.0 + j as f64 * 10.0 / 16.0);
    }
}

#[test]
fn time_reversal_returns_to_start() {
    let g = PeriodicGrid::new(128, 40.0, -20.0).unwrap();
    let p = PhysicalParams::default();
    let c = loose(1e-2);
    let s0 = pulse(&g, 0.05, 0.02);
    let mut s = advance(s0.clone(), &p, &c, 100);
    s.q = s.q.scale(-1.0);
    let mut back = advance(s, &p, &c, 100);
    back.q = back.q.scale(-1.0);
    assert!((&back.eta - &s0.eta).max_abs() < 1e-10);
    assert!((&back.q - &s0.q).max_abs() < 1e-10);
}

#[test]
fn rk4_is_fourth_order() {
    let g = PeriodicGrid::new(64, 20.0, -10.0).unwrap();
    let p = PhysicalParams::default();
    let s0 = pulse(&g, 0.1, 0.05);
    let run = |dt: f64, n: usize| {
        let c = loose(dt);
        let mut s = s0.clone();
        for _ in 0..n {
            s = step_rk4_by(&s, &p, &c, dt).unwrap();
        }
        s.eta
    };
    let (a, b, c) = (run(0.2, 5), run(0.1, 10), run(0.05, 20));
    let ratio = (&a - &b).max_abs() / (&b - &c).max_abs();
    assert!((ratio - 16.0).abs() < 2.0, "ratio {ratio}");
}

#[test]
fn whole_node_shift_commutes_with_evolution() {
    let g = PeriodicGrid::new(128, 40.0, -20.0).unwrap();
    let p = PhysicalParams::default();
    let c = loose(1e-2);
    let s0 = pulse(&g, 0.05, 0.02);
    let roll = |f: &RealField, by: usize| {
        let v = f.samples();
        let n = v.len();
        RealField::new(&g, (0..n).map(|j| v[(j + n - by) % n]).collect()).unwrap()
    };
    let shifted = SurfaceState::new(0.0, roll(&s0.eta, 7), roll(&s0.q, 7)).unwrap();
    let a = advance(s0, &p, &c, 40);
    let b = advance(shifted, &p, &c, 40);
    assert!((&roll(&a.eta, 7) - &b.eta).max_abs() < 1e-14);
    assert!((&roll(&a.q, 7) - &b.q).max_abs() < 1e-14);
}

#[test]
fn dno_agrees_with_direct_extension() {
    let g = PeriodicGrid::new(128, 40.0, -20.0).unwrap();
    let k = 2.0 * PI * 6.0 / 40.0;
    let eta = g.from_fn(|x| 0.02 / k * (k * x).cos());
    let q = g.from_fn(|x| 0.01 * (-(x / 3.0).powi(2)).exp());
    let errs: Vec<f64> = [1, 2, 4]
        .iter()
        .map(|&o| dno_extension_error(&eta, &q, 1.0, o).unwrap())
        .collect();
    assert!(errs[2] < 1e-6, "{errs:?}");
    assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
}

#[test]
fn shear_and_capillary_dispersion() {
    let g = PeriodicGrid::new(64, 40.0, -20.0).unwrap();
    let c = loose(1e-2);
    for (omega, sigma) in [(0.5, 0.0), (-0.8, 0.0), (0.0, 0.02), (0.3, 0.01)] {
        let p = PhysicalParams {
            omega,
            sigma,
            ..PhysicalParams::default()
        };
        let fit = linear_dispersion(&g, &p, &c, 4, 1e-7, 2000).unwrap();
        assert!(fit.relative_error < 1e-4, "omega {omega} sigma {sigma}: {fit:?}");
    }
}

#[test]
fn bulk_integrals_of_a_flat_mode() {
    let h = 1.5;
    let g = PeriodicGrid::new(64, 2.0 * PI * 2.0, -2.0 * PI).unwrap();
    let k = 1.5;
    let a = 0.3;
    let psi = g.from_fn(|x| a * (k * x).cos());
    let ext = HarmonicExtension::from_flat_trace(&psi, h);
    let p = PhysicalParams {
        h,
        ..PhysicalParams::default()
    };
    let l = g.length();
    let i = bulk_integrals(&ext, &g.zeros(), &p, 24).unwrap();
    let kinetic = 0.25 * a * a * k * (k * h).tanh() * l;
    assert!(i[0].abs() < 1e-12);
    assert!((i[1] - (kinetic - 0.5 * h * h * l)).abs() < 1e-11, "{}", i[1]);
    assert!((i[2] - h * l).abs() < 1e-12);
    assert!(i[6].abs() < 1e-12);
}

#[test]
fn contour_integrals_match_bulk_on_a_pulse() {
    let g = PeriodicGrid::new(128, 40.0, -20.0).unwrap();
    let p = PhysicalParams::default();
    let s = pulse(&g, 0.05, 0.02);
    let ext = fit_extension(&s.eta, &s.q, p.h, Default::default()).unwrap();
    let bulk = bulk_integrals(&ext, &s.eta, &p, 32).unwrap();
    let contour = contour_integrals(&s, &ext, &p);
    // I7 differs by construction: circulation in the bulk, a moment of phi on the contour.
    for i in [0, 1, 2, 3, 4, 5, 7] {
        let tol = 1e-10 * bulk[i].abs().max(1.0);
        assert!((bulk[i] - contour[i]).abs() < tol, "I{}: {} vs {}", i + 1, bulk[i], contour[i]);
    }
}
