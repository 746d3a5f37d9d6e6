//! Contour integrals around the fluid layer and the Green identities.
//!
//! The boundary is the surface traversed in `+x` followed by the bed in
//! `-x`; lateral segments are dropped. With this orientation the outward
//! normal line element is `n ds = (-dz, dx)` on both pieces.

use num_complex::Complex64;

use crate::bulk::{HarmonicExtension, PhysicalParams, PotentialSample};
use crate::dno::SurfaceState;
use crate::error::Result;
use crate::grid::{compensated_sum, RealField};
use crate::test_functions::HarmonicTestFunction;

use super::weak::IdentityResidual;

/// `I1..I8` along the closed boundary.
pub fn contour_integrals(
    state: &SurfaceState,
    ext: &HarmonicExtension,
    params: &PhysicalParams,
) -> [f64; 8] {
    let grid = state.eta.grid();
    let h = params.h;
    let l = grid.length();
    let eta = &state.eta;
    let q = &state.q;
    let ex = eta.dx();
    let x = grid.x_field();
    let bottom = ext.bottom_trace();
    let traces = ext.eval_on_curve(eta);
    let gq: Vec<f64> = traces
        .iter()
        .zip(ex.samples())
        .map(|(p, e)| p.phi_z - e * p.phi_x)
        .collect();
    let gq = RealField::from_raw(grid, gq);
    let int = |f: RealField| f.integrate();
    [
        -int(q * &ex),
        0.5 * int(q * &gq) + 0.5 * params.g * int(eta * eta) - 0.5 * params.g * h * h * l,
        int(eta.clone()) + h * l,
        int(q.clone()) - int(bottom.clone()),
        int(&x * eta) + h * int(x.clone()),
        0.5 * int(eta * eta) - 0.5 * h * h * l,
        int(q * &(eta - &(&x * &ex))) + h * int(bottom.clone()),
        int(q * &(&x + &(eta * &ex))) - int(&x * &bottom),
    ]
}

/// Test function of a Green identity: a harmonic polynomial or `phi = x z`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GreenTest {
    Degree(u32),
    Xz,
}

/// `(grad phi_z, grad phi_x)` of the test function at a point.
fn test_gradients(test: GreenTest, x: f64, z: f64) -> Result<([Complex64; 2], [Complex64; 2])> {
    match test {
        GreenTest::Degree(n) => {
            let tf = HarmonicTestFunction::new(n)?;
            let (_, pzz, _) = tf.eval_z_derivatives(x, z);
            let pxz = Complex64::new(0.0, -1.0) * pzz;
            let pxx = -pzz;
            Ok(([pxz, pzz], [pxx, pxz]))
        }
        GreenTest::Xz => {
            let one = Complex64::new(1.0, 0.0);
            let zero = Complex64::new(0.0, 0.0);
            // phi_z = x, phi_x = z
            Ok(([one, zero], [zero, one]))
        }
    }
}

/// `(U, V)` with `U + i V = f(phi_x + i phi_z)` for `f = w`, `w^2/2`, `w^3/3`.
fn uv(f_degree: u32, p: &PotentialSample) -> (f64, f64) {
    let (a, b) = (p.phi_x, p.phi_z);
    match f_degree {
        1 => (a, b),
        2 => (0.5 * (a * a - b * b), a * b),
        _ => (a * a * a / 3.0 - a * b * b, a * a * b - b * b * b / 3.0),
    }
}

pub fn green_identity_id(f_degree: u32, test: GreenTest) -> &'static str {
    match (f_degree, test) {
        (_, GreenTest::Xz) => "xz_case",
        (1, _) => "idA",
        (2, _) => "idB",
        _ => "third_order",
    }
}

/// `contour int U grad phi_z . n + V grad phi_x . n ds` for the fitted
/// potential, normalised by the integral of the absolute integrand.
pub fn green_identity_residual(
    ext: &HarmonicExtension,
    eta: &RealField,
    f_degree: u32,
    test: GreenTest,
    t: f64,
) -> Result<IdentityResidual> {
    let traces = BoundaryTraces::new(ext, eta);
    green_identity_residual_on(&traces, f_degree, test, t)
}

/// Potential and derivatives sampled along the surface and the bed.
#[derive(Clone, Debug)]
pub struct BoundaryTraces {
    eta: RealField,
    depth: f64,
    surface: Vec<PotentialSample>,
    bed: Vec<PotentialSample>,
}

impl BoundaryTraces {
    pub fn new(ext: &HarmonicExtension, eta: &RealField) -> Self {
        let h = ext.depth();
        Self {
            eta: eta.clone(),
            depth: h,
            surface: ext.eval_on_curve(eta),
            bed: ext.eval_on_curve(&eta.grid().constant(-h)),
        }
    }
}

/// [`green_identity_residual`] on precomputed traces.
pub fn green_identity_residual_on(
    traces: &BoundaryTraces,
    f_degree: u32,
    test: GreenTest,
    t: f64,
) -> Result<IdentityResidual> {
    if !(1..=3).contains(&f_degree) {
        return Err(crate::error::Error::param(
            "f_degree",
            format!("must be 1, 2 or 3, got {f_degree}"),
        ));
    }
    let eta = &traces.eta;
    let grid = eta.grid();
    let h = traces.depth;
    let ex = eta.dx();
    let (surf, bed) = (&traces.surface, &traces.bed);
    let mut terms: Vec<Complex64> = Vec::with_capacity(2 * grid.n_points());
    for j in 0..grid.n_points() {
        let x = grid.node(j);
        let e = eta.samples()[j];
        let exj = ex.samples()[j];
        // Surface: grad F . n ds = (F_z - eta_x F_x) dx.
        let (gz, gx) = test_gradients(test, x, e)?;
        let (u, v) = uv(f_degree, &surf[j]);
        terms.push(u * (gz[1] - exj * gz[0]) + v * (gx[1] - exj * gx[0]));
        // Bed: grad F . n ds = -F_z dx.
        let (gz, gx) = test_gradients(test, x, -h)?;
        let (u, v) = uv(f_degree, &bed[j]);
        terms.push(-(u * gz[1] + v * gx[1]));
    }
    let dx = grid.spacing();
    let re = compensated_sum(terms.iter().map(|c| c.re)) * dx;
    let im = compensated_sum(terms.iter().map(|c| c.im)) * dx;
    let abs = compensated_sum(terms.iter().map(|c| c.norm())) * dx;
    let scale = abs.max(1e-300);
    let degree = match test {
        GreenTest::Degree(n) => n,
        GreenTest::Xz => 2,
    };
    Ok(IdentityResidual {
        t,
        id: green_identity_id(f_degree, test).to_string(),
        degree,
        residual: if abs == 0.0 {
            0.0
        } else {
            Complex64::new(re, im).norm() / scale
        },
        scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::PeriodicGrid;
    use std::f64::consts::PI;

    #[test]
    fn rest_state_contours() {
        let g = PeriodicGrid::new(32, 10.0, -5.0).unwrap();
        let s = SurfaceState::new(0.0, g.zeros(), g.zeros()).unwrap();
        let ext = HarmonicExtension::zero(&g, 2.0);
        let p = PhysicalParams {
            h: 2.0,
            ..Default::default()
        };
        let i = contour_integrals(&s, &ext, &p);
        assert!((i[2] - 20.0).abs() < 1e-12);
        for k in [0, 3, 6, 7] {
            assert_eq!(i[k], 0.0);
        }
        let r = green_identity_residual(&ext, &s.eta, 2, GreenTest::Degree(3), 0.0).unwrap();
        assert_eq!(r.residual, 0.0);
        assert!(r.scale > 0.0);
    }

    #[test]
    fn flat_single_mode_identities() {
        let g = PeriodicGrid::new(64, 4.0 * PI, -2.0 * PI).unwrap();
        let h = 1.0;
        let psi = g.from_fn(|x| 0.3 * (2.0 * x).cos() + 0.1 * (x).sin());
        let ext = HarmonicExtension::from_flat_trace(&psi, h);
        for f in 1..=3 {
            for n in 1..=2 {
                let r = green_identity_residual(&ext, &g.zeros(), f, GreenTest::Degree(n), 0.0)
                    .unwrap();
                assert!(r.residual <= 1e-10, "f={f} n={n}: {}", r.residual);
            }
        }
    }
}
