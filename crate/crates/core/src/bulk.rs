//! Harmonic extension of surface data into the fluid layer `-h < z < eta`,
//! bulk velocity and pressure, and the area integrals over the layer.
//!
//! The extension is stored as Fourier coefficients `a_k` of
//! `phi(x, z) = sum_k a_k cosh(|k|(z + h)) / cosh(|k| h) exp(i k (x - x_min))`,
//! so `phi_z(x, -h) = 0` holds by construction.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{signed_index, PeriodicGrid, RealField};

/// Physical constants. `sigma` is kinematic (already divided by `rho`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicalParams {
    pub g: f64,
    pub h: f64,
    pub rho: f64,
    pub omega: f64,
    pub sigma: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self {
            g: 1.0,
            h: 1.0,
            rho: 1.0,
            omega: 0.0,
            sigma: 0.0,
        }
    }
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("g", self.g), ("h", self.h), ("rho", self.rho)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::param(name, format!("must be positive and finite, got {v}")));
            }
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(Error::param("sigma", format!("must be nonnegative, got {}", self.sigma)));
        }
        if !self.omega.is_finite() {
            return Err(Error::param("omega", "must be finite"));
        }
        Ok(())
    }
}

/// Symbol of `d^m/dz^m` applied to `cosh(|k|(z+h))/cosh(|k|h)` at `z = 0`.
pub(crate) fn vertical_symbol(m: u32, kappa: f64, h: f64) -> f64 {
    let a = kappa.abs();
    let p = a.powi(m as i32);
    if m % 2 == 1 {
        p * (a * h).tanh()
    } else {
        p
    }
}

fn factorial(m: u32) -> f64 {
    (1..=m).map(f64::from).product()
}

/// `(cosh(k(z+h)), sinh(k(z+h))) / cosh(k h)` for `k >= 0`, without overflow.
fn profile(k: f64, z: f64, h: f64) -> (f64, f64) {
    if k == 0.0 {
        return (1.0, 0.0);
    }
    let e = (k * z).exp();
    let b = (-2.0 * k * (z + h)).exp();
    let d = 1.0 + (-2.0 * k * h).exp();
    (e * (1.0 + b) / d, e * (1.0 - b) / d)
}

/// Settings for [`fit_extension`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Largest tolerated `cosh(|k|(h + max eta)) / cosh(|k| h)` over resolved modes.
    pub max_amplification: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 200,
            max_amplification: 1e8,
        }
    }
}

/// Potential and derivatives at one point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PotentialSample {
    pub phi: f64,
    pub phi_x: f64,
    pub phi_z: f64,
    pub phi_xx: f64,
    pub phi_xz: f64,
    pub phi_zz: f64,
}

#[derive(Clone, Debug)]
pub struct HarmonicExtension {
    grid: PeriodicGrid,
    depth: f64,
    /// `a_k` in FFT order, already divided by `n`.
    coefficients: Vec<Complex64>,
    iterations: usize,
    residual: f64,
}

/// Sum `sum_m eta^m/m! * C_{m+shift} psi` until terms fall below `floor`.
fn taylor_sum(
    eta: &RealField,
    psi_hat: &[Complex64],
    h: f64,
    first: u32,
    shift: u32,
    floor: f64,
) -> RealField {
    let grid = eta.grid();
    let mut acc = grid.zeros();
    let mut m = first;
    loop {
        let mut spec = psi_hat.to_vec();
        for (c, &k) in spec.iter_mut().zip(grid.wavenumbers()) {
            *c *= vertical_symbol(m + shift, k, h);
        }
        let cm = RealField::from_spectrum(grid, spec);
        let f = factorial(m);
        let term = eta.zip_map(&cm, |e, c| e.powi(m as i32) / f * c);
        let size = term.max_abs();
        acc = &acc + &term;
        if size <= floor || m >= 60 {
            break;
        }
        m += 1;
    }
    acc
}

/// Solve `phi(x_j, eta_j) = q_j` for the extension coefficients.
pub fn fit_extension(
    eta: &RealField,
    q: &RealField,
    h: f64,
    opts: FitOptions,
) -> Result<HarmonicExtension> {
    fit_extension_from(eta, q, h, opts, None)
}

/// As [`fit_extension`], starting the iteration from a previous flat trace.
pub fn fit_extension_from(
    eta: &RealField,
    q: &RealField,
    h: f64,
    opts: FitOptions,
    guess: Option<&HarmonicExtension>,
) -> Result<HarmonicExtension> {
    eta.same_grid(q)?;
    let grid = eta.grid().clone();
    let max_eta = eta.max_abs();
    if max_eta >= h {
        return Err(Error::SurfaceBelowBottom { max_eta, depth: h });
    }
    let amplification = grid
        .wavenumbers()
        .iter()
        .take(grid.dealias_cutoff() + 1)
        .map(|&k| {
            let (c, _) = profile(k.abs(), max_eta, h);
            c
        })
        .fold(1.0, f64::max);
    if amplification > opts.max_amplification {
        return Err(Error::IllConditioned {
            amplification,
            limit: opts.max_amplification,
        });
    }

    let scale = q.max_abs().max(1.0);
    let floor = 1e-18 * scale;
    let mut psi = match guess {
        Some(g) if g.grid == grid => g.flat_trace(),
        _ => q.clone(),
    };
    let mut residual = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let psi_hat = psi.spectrum();
        let s = taylor_sum(eta, &psi_hat, h, 1, 0, floor);
        let next = q - &s;
        residual = (&next - &psi).max_abs() / scale;
        psi = next;
        if !residual.is_finite() {
            break;
        }
        if residual <= opts.tol {
            let n = grid.n_points() as f64;
            let coefficients = psi.spectrum().into_iter().map(|c| c / n).collect();
            return Ok(HarmonicExtension {
                grid,
                depth: h,
                coefficients,
                iterations: it,
                residual,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iter,
        residual,
    })
}

impl HarmonicExtension {
    /// Extension with `phi(x, 0) = psi(x)`.
    pub fn from_flat_trace(psi: &RealField, h: f64) -> Self {
        let n = psi.grid().n_points() as f64;
        Self {
            grid: psi.grid().clone(),
            depth: h,
            coefficients: psi.spectrum().into_iter().map(|c| c / n).collect(),
            iterations: 0,
            residual: 0.0,
        }
    }

    pub fn zero(grid: &PeriodicGrid, h: f64) -> Self {
        Self::from_flat_trace(&grid.zeros(), h)
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn depth(&self) -> f64 {
        self.depth
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn fit_residual(&self) -> f64 {
        self.residual
    }

    fn spectrum(&self) -> Vec<Complex64> {
        let n = self.grid.n_points() as f64;
        self.coefficients.iter().map(|c| c * n).collect()
    }

    /// `phi(x, 0)` on the grid.
    pub fn flat_trace(&self) -> RealField {
        RealField::from_spectrum(&self.grid, self.spectrum())
    }

    /// `Q = phi(x, -h)` on the grid.
    pub fn bottom_trace(&self) -> RealField {
        let h = self.depth;
        let mut spec = self.spectrum();
        for (c, &k) in spec.iter_mut().zip(self.grid.wavenumbers()) {
            *c /= (k.abs() * h).cosh();
        }
        RealField::from_spectrum(&self.grid, spec)
    }

    /// Direct mode sum at an arbitrary point with `z >= -h`.
    pub fn eval_potential(&self, x: f64, z: f64) -> PotentialSample {
        let n = self.grid.n_points();
        let h = self.depth;
        let base = 2.0 * std::f64::consts::PI / self.grid.length();
        let xi = x - self.grid.x_min();
        let mut out = PotentialSample::default();
        for m in 0..=n / 2 {
            let a = self.coefficients[m];
            if a == Complex64::new(0.0, 0.0) {
                continue;
            }
            let k = base * signed_index(m, n).unsigned_abs() as f64;
            let w = if m == 0 || m == n / 2 { 1.0 } else { 2.0 };
            let (c, s) = profile(k, z, h);
            let e = Complex64::from_polar(1.0, k * xi) * a * w;
            let ik = Complex64::new(0.0, k);
            out.phi += (e * c).re;
            out.phi_z += (e * (k * s)).re;
            out.phi_zz += (e * (k * k * c)).re;
            if m != n / 2 {
                out.phi_x += (e * ik * c).re;
                out.phi_xz += (e * ik * (k * s)).re;
            }
            out.phi_xx -= (e * (k * k * c)).re;
        }
        out
    }

    /// [`Self::eval_potential`] at every node along the curve `z = z_j`.
    pub fn eval_on_curve(&self, z: &RealField) -> Vec<PotentialSample> {
        (0..self.grid.n_points())
            .map(|j| self.eval_potential(self.grid.node(j), z.samples()[j]))
            .collect()
    }

    /// `(u, v) = (phi_x - omega z, phi_z)`.
    pub fn physical_velocities(&self, omega: f64, x: f64, z: f64) -> (f64, f64) {
        let p = self.eval_potential(x, z);
        (p.phi_x - omega * z, p.phi_z)
    }
}

/// `p / rho` from the Bernoulli relation with a centred time difference for `phi_t`.
pub fn bulk_pressure_irrotational(
    prev: &HarmonicExtension,
    now: &HarmonicExtension,
    next: &HarmonicExtension,
    dt: f64,
    params: &PhysicalParams,
    x: f64,
    z: f64,
) -> f64 {
    let phi_t = (next.eval_potential(x, z).phi - prev.eval_potential(x, z).phi) / (2.0 * dt);
    let p = now.eval_potential(x, z);
    -phi_t - 0.5 * (p.phi_x * p.phi_x + p.phi_z * p.phi_z) - params.g * z
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Bulk integrals `I1*..I8*` over `-h < z < eta(x)`.
///
/// Order: `int u`, `int (u^2+v^2)/2 + g z`, area, `int v`, `int x`, `int z`,
/// `int (v_x - u_z)`, `int (x v - z u)`.
pub fn bulk_integrals(
    ext: &HarmonicExtension,
    eta: &RealField,
    params: &PhysicalParams,
    nz: usize,
) -> Result<[f64; 8]> {
    if nz < 8 {
        return Err(Error::param("nz", format!("need at least 8 vertical nodes, got {nz}")));
    }
    let (xi, wi) = gauss_legendre(nz);
    let grid = eta.grid();
    let (h, g, om) = (params.h, params.g, params.omega);
    let mut total = [0.0f64; 8];
    for j in 0..grid.n_points() {
        let x = grid.node(j);
        let depth = eta.samples()[j] + h;
        let half = 0.5 * depth;
        let mut col = [0.0f64; 8];
        for (&s, &w) in xi.iter().zip(&wi) {
            let z = -h + half * (1.0 + s);
            let p = ext.eval_potential(x, z);
            let u = p.phi_x - om * z;
            let v = p.phi_z;
            let u_z = p.phi_xz - om;
            let v_x = p.phi_xz;
            let vals = [
                u,
                0.5 * (u * u + v * v) + g * z,
                1.0,
                v,
                x,
                z,
                v_x - u_z,
                x * v - z * u,
            ];
            for (c, v) in col.iter_mut().zip(vals) {
                *c += w * v;
            }
        }
        for (t, c) in total.iter_mut().zip(col) {
            *t += half * c;
        }
    }
    let dx = grid.spacing();
    Ok(total.map(|v| v * dx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid() -> PeriodicGrid {
        PeriodicGrid::new(64, 2.0 * PI * 4.0, -4.0 * PI).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(PhysicalParams::default().validate().is_ok());
        let bad = PhysicalParams {
            h: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = PhysicalParams {
            sigma: -1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn flat_single_mode_matches_separation_of_variables() {
        let g = grid();
        let h = 0.7;
        let k = 3.0 * 2.0 * PI / g.length();
        let q = g.from_fn(|x| (k * x).cos());
        let ext = fit_extension(&g.zeros(), &q, h, FitOptions::default()).unwrap();
        for &(x, z) in &[(0.3, -0.2), (-5.0, -0.7), (2.0, 0.0), (7.1, -0.45)] {
            let p = ext.eval_potential(x, z);
            let expect = (k * x).cos() * (k * (z + h)).cosh() / (k * h).cosh();
            assert!((p.phi - expect).abs() < 1e-13, "{} vs {}", p.phi, expect);
        }
        let bottom = ext.bottom_trace();
        let expect = g.from_fn(|x| (k * x).cos() / (k * h).cosh());
        assert!((&bottom - &expect).max_abs() < 1e-14);
        assert!(ext.eval_potential(1.1, -h).phi_z.abs() < 1e-15);
    }

    #[test]
    fn zero_extension() {
        let g = grid();
        let ext = fit_extension(&g.zeros(), &g.zeros(), 1.0, FitOptions::default()).unwrap();
        assert_eq!(ext.eval_potential(0.2, -0.3), PotentialSample::default());
        assert_eq!(ext.bottom_trace().max_abs(), 0.0);
    }

    #[test]
    fn fit_rejects_surface_below_bottom() {
        let g = grid();
        let eta = g.constant(1.2);
        assert!(matches!(
            fit_extension(&eta, &g.zeros(), 1.0, FitOptions::default()),
            Err(Error::SurfaceBelowBottom { .. })
        ));
    }

    #[test]
    fn fit_reproduces_gaussian_trace_between_nodes() {
        let g = PeriodicGrid::new(128, 40.0, -20.0).unwrap();
        let h = 1.0;
        let eta = g.from_fn(|x| 0.05 * (-(x / 2.0).powi(2)).exp());
        let q = g.from_fn(|x| 0.1 * (-(x / 2.5).powi(2)).exp());
        let opts = FitOptions {
            tol: 1e-13,
            ..Default::default()
        };
        let ext = fit_extension(&eta, &q, h, opts).unwrap();
        for (j, p) in ext.eval_on_curve(&eta).iter().enumerate() {
            assert!((p.phi - q.samples()[j]).abs() < 1e-12);
        }
        // Off the collocation nodes, compare against the analytic profiles.
        for i in 0..50 {
            let x = -7.0 + 0.2793 * i as f64;
            let e = 0.05 * (-(x / 2.0f64).powi(2)).exp();
            let phi = ext.eval_potential(x, e).phi;
            let expect = 0.1 * (-(x / 2.5f64).powi(2)).exp();
            assert!((phi - expect).abs() < 1e-9, "x={x}: {phi} vs {expect}");
        }
    }

    #[test]
    fn laplace_and_bottom_condition_hold() {
        let g = PeriodicGrid::new(64, 20.0, -10.0).unwrap();
        let eta = g.from_fn(|x| 0.03 * (-(x * x) / 4.0).exp());
        let q = g.from_fn(|x| 0.05 * x * (-(x * x) / 4.0).exp());
        let ext = fit_extension(&eta, &q, 1.5, FitOptions::default()).unwrap();
        for i in 0..20 {
            let x = -9.0 + 0.91 * i as f64;
            let z = -1.5 + 0.07 * i as f64;
            let p = ext.eval_potential(x, z);
            assert!((p.phi_xx + p.phi_zz).abs() < 1e-10);
            assert!(ext.eval_potential(x, -1.5).phi_z.abs() < 1e-15);
            let (u, v) = ext.physical_velocities(0.8, x, z);
            let hh = 1e-4;
            let (_, v_r) = ext.physical_velocities(0.8, x + hh, z);
            let (_, v_l) = ext.physical_velocities(0.8, x - hh, z);
            let (u_u, _) = ext.physical_velocities(0.8, x, z + hh);
            let (u_d, _) = ext.physical_velocities(0.8, x, z - hh);
            let curl = (v_r - v_l) / (2.0 * hh) - (u_u - u_d) / (2.0 * hh);
            assert!((curl - 0.8).abs() < 1e-8);
            let _ = (u, v);
        }
    }

    #[test]
    fn pure_shear_velocity() {
        let ext = HarmonicExtension::zero(&grid(), 1.0);
        assert_eq!(ext.physical_velocities(1.0, 0.0, -0.5), (0.5, 0.0));
    }

    #[test]
    fn hydrostatic_rest_pressure() {
        let g = grid();
        let p = PhysicalParams::default();
        let ext = HarmonicExtension::zero(&g, 1.0);
        assert_eq!(bulk_pressure_irrotational(&ext, &ext, &ext, 0.1, &p, 0.0, -0.3), 0.3);
        assert_eq!(bulk_pressure_irrotational(&ext, &ext, &ext, 0.1, &p, 0.0, -1.0), 1.0);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        let i14: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((i14 - 2.0 / 15.0).abs() < 1e-14);
        assert!(x.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn rest_state_bulk_integrals() {
        let g = grid();
        let params = PhysicalParams::default();
        let ext = HarmonicExtension::zero(&g, 1.0);
        let i = bulk_integrals(&ext, &g.zeros(), &params, 16).unwrap();
        let l = g.length();
        assert!((i[2] - l).abs() < 1e-12);
        assert!((i[1] + l / 2.0).abs() < 1e-12);
        assert_eq!(i[0], 0.0);
        assert_eq!(i[3], 0.0);

        let shear = PhysicalParams {
            omega: 0.5,
            ..params
        };
        let i = bulk_integrals(&ext, &g.zeros(), &shear, 16).unwrap();
        assert!((i[6] - 0.5 * l).abs() < 1e-12);
        assert!(bulk_integrals(&ext, &g.zeros(), &params, 4).is_err());
    }

    #[test]
    fn bulk_i6_for_cosine_surface() {
        let g = grid();
        let k = 2.0 * 2.0 * PI / g.length();
        let a = 1e-3;
        let eta = g.from_fn(|x| a * (k * x).cos());
        let ext = HarmonicExtension::zero(&g, 1.0);
        let i = bulk_integrals(&ext, &eta, &PhysicalParams::default(), 16).unwrap();
        // int_{-h}^{eta} z dz = (eta^2 - h^2)/2, integrated over x.
        let expect = -g.length() / 2.0 + a * a * g.length() / 4.0;
        assert!((i[5] - expect).abs() < 1e-13);
    }
}
