//! Independent reference computations: the flat-surface DNO symbol, the
//! DNO against a direct harmonic extension, and linear dispersion.

use num_complex::Complex64;

use crate::bulk::{fit_extension, FitOptions, PhysicalParams};
use crate::dno::{dno_apply, step_rk4, SolverConfig, SurfaceState};
use crate::error::{Error, Result};
use crate::grid::{PeriodicGrid, RealField};

/// Worst relative error of `G(0) cos(k x)` against `k tanh(k h) cos(k x)`
/// over the modes kept by dealiasing.
pub fn flat_symbol_error(grid: &PeriodicGrid, h: f64, order: u32) -> Result<f64> {
    let zero = grid.zeros();
    let l = grid.length();
    let mut worst = 0.0f64;
    for m in 1..=grid.dealias_cutoff() {
        let k = 2.0 * std::f64::consts::PI * m as f64 / l;
        let q = grid.from_fn(|x| (k * (x - grid.x_min())).cos());
        let got = dno_apply(&zero, &q, h, order)?;
        let sym = k * (k * h).tanh();
        let err = got
            .samples()
            .iter()
            .zip(q.samples())
            .fold(0.0f64, |e, (g, c)| e.max((g - sym * c).abs()));
        worst = worst.max(err / sym);
    }
    Ok(worst)
}

/// `max |G_dno q - G_ext q| / max |G_ext q|`, where `G_ext` differentiates
/// the fitted harmonic extension on the surface.
pub fn dno_extension_error(eta: &RealField, q: &RealField, h: f64, order: u32) -> Result<f64> {
    let dno = dno_apply(eta, q, h, order)?;
    let ext = fit_extension(
        eta,
        q,
        h,
        FitOptions {
            tol: 1e-14,
            ..FitOptions::default()
        },
    )?;
    let ex = eta.dx();
    let reference: Vec<f64> = ext
        .eval_on_curve(eta)
        .iter()
        .zip(ex.samples())
        .map(|(p, e)| p.phi_z - e * p.phi_x)
        .collect();
    let scale = reference.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let err = reference
        .iter()
        .zip(dno.samples())
        .fold(0.0f64, |m, (r, d)| m.max((r - d).abs()));
    Ok(err / scale.max(f64::MIN_POSITIVE))
}

/// Growth rates `lambda` (with `eta ~ exp(lambda t)`) of the linearised flow
/// for wavenumber `k > 0`.
pub fn linear_rates(k: f64, params: &PhysicalParams) -> [Complex64; 2] {
    let t = k * (k * params.h).tanh();
    let g = params.g + params.sigma * k * k;
    // Eigenvalues of [[0, T], [-g, omega T / (i k)]].
    let b = Complex64::new(0.0, -params.omega * t / k);
    let disc = (b * b - 4.0 * g * t).sqrt();
    let mut r = [(b + disc) / 2.0, (b - disc) / 2.0];
    r.sort_by(|a, b| a.im.total_cmp(&b.im));
    r
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DispersionFit {
    pub k: f64,
    /// Measured and expected `lambda`, ordered by imaginary part.
    pub measured: [Complex64; 2],
    pub expected: [Complex64; 2],
    pub relative_error: f64,
}

/// Integrate a small cosine mode and recover its temporal rates from the
/// mode's Fourier coefficient.
pub fn linear_dispersion(
    grid: &PeriodicGrid,
    params: &PhysicalParams,
    config: &SolverConfig,
    mode_index: usize,
    amplitude: f64,
    n_steps: usize,
) -> Result<DispersionFit> {
    if mode_index == 0 || mode_index > grid.dealias_cutoff() {
        return Err(Error::param("mode_index", "must be a resolved nonzero mode"));
    }
    if n_steps < 8 {
        return Err(Error::InsufficientSeries {
            needed: 8,
            got: n_steps,
        });
    }
    let k = 2.0 * std::f64::consts::PI * mode_index as f64 / grid.length();
    let eta = grid.from_fn(|x| amplitude * (k * (x - grid.x_min())).cos());
    let mut state = SurfaceState::new(0.0, eta, grid.zeros())?;
    let mut c = Vec::with_capacity(n_steps + 1);
    c.push(state.eta.spectrum()[mode_index]);
    for _ in 0..n_steps {
        state = step_rk4(&state, params, config)?;
        c.push(state.eta.spectrum()[mode_index]);
    }
    let expected = linear_rates(k, params);
    let dt = config.dt;
    let measured = if params.omega == 0.0 {
        let re: Vec<f64> = c.iter().map(|v| v.re).collect();
        let mut num = 0.0;
        let mut den = 0.0;
        for j in 1..re.len() - 1 {
            num += re[j] * (re[j + 1] + re[j - 1]);
            den += re[j] * re[j];
        }
        let w = (num / den / 2.0).clamp(-1.0, 1.0).acos() / dt;
        [Complex64::new(0.0, -w), Complex64::new(0.0, w)]
    } else {
        prony2(&c, dt)?
    };
    let scale = expected[1].norm().max(expected[0].norm());
    let relative_error = measured
        .iter()
        .zip(&expected)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).norm() / scale));
    Ok(DispersionFit {
        k,
        measured,
        expected,
        relative_error,
    })
}

/// Two-exponential Prony fit: least squares for `c_{j+1} = a c_j + b c_{j-1}`,
/// then the roots of `z^2 - a z - b` mapped to rates.
fn prony2(c: &[Complex64], dt: f64) -> Result<[Complex64; 2]> {
    let (mut m11, mut m12, mut m22) = (0.0, Complex64::new(0.0, 0.0), 0.0);
    let (mut r1, mut r2) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    for j in 1..c.len() - 1 {
        let (u, v, y) = (c[j], c[j - 1], c[j + 1]);
        m11 += u.norm_sqr();
        m12 += u.conj() * v;
        m22 += v.norm_sqr();
        r1 += u.conj() * y;
        r2 += v.conj() * y;
    }
    let det = m11 * m22 - m12.norm_sqr();
    if det.abs() <= f64::EPSILON * m11 * m22 {
        return Err(Error::IllConditioned {
            amplification: f64::INFINITY,
            limit: 1.0 / f64::EPSILON,
        });
    }
    let a = (r1 * m22 - m12 * r2) / det;
    let b = (r2 * m11 - m12.conj() * r1) / det;
    let disc = (a * a + 4.0 * b).sqrt();
    let mut r = [((a + disc) / 2.0).ln() / dt, ((a - disc) / 2.0).ln() / dt];
    r.sort_by(|p, q| p.im.total_cmp(&q.im));
    Ok(r)
}
