//! Weak-form ledgers `A`, `B` and their evolution identities, for the
//! irrotational and the constant-vorticity equations.

use num_complex::Complex64;

use crate::bulk::{bulk_pressure_irrotational, HarmonicExtension, PhysicalParams};
use crate::dno::SurfaceState;
use crate::error::{Error, Result};
use crate::grid::{compensated_sum, RealField};
use crate::test_functions::HarmonicTestFunction;

/// One observer sample as seen by the weak-form audit.
#[derive(Clone, Copy, Debug)]
pub struct Frame<'a> {
    pub state: &'a SurfaceState,
    pub eta_t: &'a RealField,
    pub ext: &'a HarmonicExtension,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum WeakKind {
    Irrotational,
    Vorticity,
}

impl WeakKind {
    pub fn ids(self) -> (&'static str, &'static str) {
        match self {
            WeakKind::Irrotational => ("weakA", "weakB"),
            WeakKind::Vorticity => ("vort_weakA", "vort_weakB"),
        }
    }
}

/// `A`, `B`, their centred time derivatives and the predicted right-hand sides.
/// Complex values are stored as `[re, im]`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeakFormLedger {
    pub t: f64,
    pub degree: u32,
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub rhs_a: [f64; 2],
    pub rhs_b: [f64; 2],
    pub da_dt: [f64; 2],
    pub db_dt: [f64; 2],
}

#[derive(Clone, Debug, PartialEq)]
pub struct IdentityResidual {
    pub t: f64,
    pub id: String,
    pub degree: u32,
    pub residual: f64,
    pub scale: f64,
}

fn pair(c: Complex64) -> [f64; 2] {
    [c.re, c.im]
}

fn cplx(p: [f64; 2]) -> Complex64 {
    Complex64::new(p[0], p[1])
}

/// Trapezoid sum of complex samples times `dx`.
fn csum(dx: f64, values: impl Iterator<Item = Complex64>) -> Complex64 {
    let v: Vec<Complex64> = values.collect();
    Complex64::new(
        compensated_sum(v.iter().map(|c| c.re)),
        compensated_sum(v.iter().map(|c| c.im)),
    ) * dx
}

/// `A = int P(x, eta)` and `B = contour int phi (sigma3 grad phi_n) . n ds`.
pub fn weak_form_ab(
    state: &SurfaceState,
    ext: &HarmonicExtension,
    n: u32,
) -> Result<(Complex64, Complex64)> {
    let tf = HarmonicTestFunction::new(n)?;
    let grid = state.eta.grid();
    let h = ext.depth();
    let ex = state.eta.dx();
    let bottom = ext.bottom_trace();
    let dx = grid.spacing();
    let a = csum(
        dx,
        (0..grid.n_points()).map(|j| tf.eval_z_antiderivative(grid.node(j), state.eta.samples()[j])),
    );
    let bs = csum(
        dx,
        (0..grid.n_points()).map(|j| {
            let x = grid.node(j);
            let (sx, sz) = tf.eval_sigma3_gradient(x, state.eta.samples()[j]);
            // (sigma3 grad) . (-eta_x, 1)
            state.q.samples()[j] * (-ex.samples()[j] * sx + sz)
        }),
    );
    let bb = csum(
        dx,
        (0..grid.n_points()).map(|j| {
            let (pz, _, _) = tf.eval_z_derivatives(grid.node(j), -h);
            bottom.samples()[j] * pz
        }),
    );
    Ok((a, bs + bb))
}

/// `B + 2 (int_S q phi_z dx - int_B Q phi_z dx)`.
pub fn weak_form_rhs_a(state: &SurfaceState, ext: &HarmonicExtension, n: u32) -> Result<Complex64> {
    let tf = HarmonicTestFunction::new(n)?;
    let (_, b) = weak_form_ab(state, ext, n)?;
    let grid = state.eta.grid();
    let h = ext.depth();
    let bottom = ext.bottom_trace();
    let dx = grid.spacing();
    let surf = csum(
        dx,
        (0..grid.n_points()).map(|j| {
            let (pz, _, _) = tf.eval_z_derivatives(grid.node(j), state.eta.samples()[j]);
            state.q.samples()[j] * pz
        }),
    );
    let bed = csum(
        dx,
        (0..grid.n_points()).map(|j| {
            let (pz, _, _) = tf.eval_z_derivatives(grid.node(j), -h);
            bottom.samples()[j] * pz
        }),
    );
    Ok(b + (surf - bed) * 2.0)
}

/// Predicted `dB/dt` at `now`, with the bed pressure from the bulk Bernoulli
/// relation using `prev`/`next` for `phi_t`.
pub fn weak_form_rhs_b(
    prev: &Frame<'_>,
    now: &Frame<'_>,
    next: &Frame<'_>,
    dt: f64,
    n: u32,
    params: &PhysicalParams,
) -> Result<Complex64> {
    let tf = HarmonicTestFunction::new(n)?;
    let s = now.state;
    let grid = s.eta.grid();
    let (g, h) = (params.g, params.h);
    let ex = s.eta.dx();
    let dx = grid.spacing();
    // Surface pressure vanishes without tension; with tension p/rho = -sigma * curvature.
    let tension = if params.sigma != 0.0 {
        let sig = params.sigma;
        let flux = ex.map(|e| sig * e / (1.0 + e * e).sqrt());
        Some(flux.dx().scale(-1.0))
    } else {
        None
    };
    let surf = csum(
        dx,
        (0..grid.n_points()).map(|j| {
            let x = grid.node(j);
            let e = s.eta.samples()[j];
            let exj = ex.samples()[j];
            let (sx, sz) = tf.eval_sigma3_gradient(x, e);
            let normal = -exj * sx + sz;
            let (_, pzz, _) = tf.eval_z_derivatives(x, e);
            let p = tension.as_ref().map_or(0.0, |t| t.samples()[j]);
            -(p + g * e) * normal - 2.0 * s.q.samples()[j] * now.eta_t.samples()[j] * pzz
        }),
    );
    let bed = csum(
        dx,
        (0..grid.n_points()).map(|j| {
            let x = grid.node(j);
            let p = bulk_pressure_irrotational(prev.ext, now.ext, next.ext, dt, params, x, -h);
            let (pz, _, _) = tf.eval_z_derivatives(x, -h);
            // (sigma3 grad phi_n) . (0, -1) = phi_{n,z}
            -(p - g * h) * pz
        }),
    );
    Ok(surf + bed)
}

/// `A = int (phi_n(x, eta) - phi_n(x, 0))`, `B = contour int phi (sigma3 grad phi_{n,z}) . n ds`.
pub fn vort_weak_form_ab(
    state: &SurfaceState,
    ext: &HarmonicExtension,
    n: u32,
) -> Result<(Complex64, Complex64)> {
    let tf = HarmonicTestFunction::new(n)?;
    let grid = state.eta.grid();
    let h = ext.depth();
    let ex = state.eta.dx();
    let bottom = ext.bottom_trace();
    let dx = grid.spacing();
    let i = Complex64::new(0.0, 1.0);
    let a = csum(
        dx,
        (0..grid.n_points()).map(|j| {
            let x = grid.node(j);
            tf.eval(x, state.eta.samples()[j]) - tf.eval(x, 0.0)
        }),
    );
    let bs = csum(
        dx,
        (0..grid.n_points()).map(|j| {
            let x = grid.node(j);
            let (_, pzz, _) = tf.eval_z_derivatives(x, state.eta.samples()[j]);
            let pxz = -i * pzz;
            state.q.samples()[j] * (-ex.samples()[j] * pxz + pzz)
        }),
    );
    let bb = csum(
        dx,
        (0..grid.n_points()).map(|j| {
            let (_, pzz, _) = tf.eval_z_derivatives(grid.node(j), -h);
            bottom.samples()[j] * pzz
        }),
    );
    Ok((a, bs + bb))
}

/// `omega int eta eta_x phi_z + contour int phi grad phi_z . n ds`.
pub fn vort_weak_form_rhs_a(
    state: &SurfaceState,
    ext: &HarmonicExtension,
    n: u32,
    omega: f64,
) -> Result<Complex64> {
    let tf = HarmonicTestFunction::new(n)?;
    let grid = state.eta.grid();
    let h = ext.depth();
    let ex = state.eta.dx();
    let bottom = ext.bottom_trace();
    let dx = grid.spacing();
    let i = Complex64::new(0.0, 1.0);
    let surf = csum(
        dx,
        (0..grid.n_points()).map(|j| {
            let x = grid.node(j);
            let e = state.eta.samples()[j];
            let exj = ex.samples()[j];
            let (pz, pzz, _) = tf.eval_z_derivatives(x, e);
            let pxz = -i * pzz;
            pz * (omega * e * exj) + state.q.samples()[j] * (pzz - exj * pxz)
        }),
    );
    let bed = csum(
        dx,
        (0..grid.n_points()).map(|j| {
            let (_, pzz, _) = tf.eval_z_derivatives(grid.node(j), -h);
            bottom.samples()[j] * pzz
        }),
    );
    Ok(surf - bed)
}

/// Predicted `dB/dt` for the sheared flow, term for term as stated, with
/// `dx^{-1}` anchored at the left end of the box.
pub fn vort_weak_form_rhs_b(
    now: &Frame<'_>,
    n: u32,
    params: &PhysicalParams,
    mean_tolerance: f64,
) -> Result<Complex64> {
    let tf = HarmonicTestFunction::new(n)?;
    let s = now.state;
    let grid = s.eta.grid();
    let (g, h, w) = (params.g, params.h, params.omega);
    let ex = s.eta.dx();
    let qx = s.q.dx();
    let anti = if w != 0.0 {
        s.eta.antiderivative_from_seam(mean_tolerance)?
    } else {
        grid.zeros()
    };
    let bottom = now.ext.bottom_trace();
    let bqx = bottom.dx();
    let dx = grid.spacing();
    let i = Complex64::new(0.0, 1.0);
    let surf = csum(
        dx,
        (0..grid.n_points()).map(|j| {
            let x = grid.node(j);
            let e = s.eta.samples()[j];
            let exj = ex.samples()[j];
            let et = now.eta_t.samples()[j];
            let q = s.q.samples()[j];
            let (_, pzz, pzzz) = tf.eval_z_derivatives(x, e);
            let pxz = -i * pzz;
            // sigma3 grad phi_z . (-eta_x, 1) = -eta_x phi_xz - phi_zz
            let normal = -exj * pxz - pzz;
            normal * (-g * e)
                - pzz * (w * e * (qx.samples()[j] - 0.5 * w * e))
                - pxz * (w * e * (et - w * e * exj))
                - pzzz * (2.0 * (q - w * anti.samples()[j]) * et)
        }),
    );
    let bed = csum(
        dx,
        (0..grid.n_points()).map(|j| {
            let (_, pzz, _) = tf.eval_z_derivatives(grid.node(j), -h);
            pzz * (0.5 * bqx.samples()[j] * bqx.samples()[j])
        }),
    );
    Ok(surf + bed)
}

/// Ledgers at every interior frame of an evenly spaced series.
pub fn weak_form_ledgers(
    frames: &[Frame<'_>],
    dt: f64,
    n: u32,
    kind: WeakKind,
    params: &PhysicalParams,
    mean_tolerance: f64,
) -> Result<Vec<WeakFormLedger>> {
    if frames.len() < 3 {
        return Err(Error::InsufficientSeries {
            needed: 3,
            got: frames.len(),
        });
    }
    if kind == WeakKind::Irrotational && params.omega != 0.0 {
        return Err(Error::param("omega", "irrotational weak forms need omega = 0"));
    }
    let ab = |f: &Frame<'_>| match kind {
        WeakKind::Irrotational => weak_form_ab(f.state, f.ext, n),
        WeakKind::Vorticity => vort_weak_form_ab(f.state, f.ext, n),
    };
    let values: Vec<(Complex64, Complex64)> = frames.iter().map(ab).collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(frames.len() - 2);
    for i in 1..frames.len() - 1 {
        let (a, b) = values[i];
        let (rhs_a, rhs_b) = match kind {
            WeakKind::Irrotational => (
                weak_form_rhs_a(frames[i].state, frames[i].ext, n)?,
                weak_form_rhs_b(&frames[i - 1], &frames[i], &frames[i + 1], dt, n, params)?,
            ),
            WeakKind::Vorticity => (
                vort_weak_form_rhs_a(frames[i].state, frames[i].ext, n, params.omega)?,
                vort_weak_form_rhs_b(&frames[i], n, params, mean_tolerance)?,
            ),
        };
        let da = (values[i + 1].0 - values[i - 1].0) / (2.0 * dt);
        let db = (values[i + 1].1 - values[i - 1].1) / (2.0 * dt);
        out.push(WeakFormLedger {
            t: frames[i].state.t,
            degree: n,
            a: pair(a),
            b: pair(b),
            rhs_a: pair(rhs_a),
            rhs_b: pair(rhs_b),
            da_dt: pair(da),
            db_dt: pair(db),
        });
    }
    Ok(out)
}

/// `|dA/dt - rhs_A| / max(1, |B|, |A|/dt)` per ledger.
pub fn weak_residual_a(ledgers: &[WeakFormLedger], dt: f64, kind: WeakKind) -> Vec<IdentityResidual> {
    ledgers
        .iter()
        .map(|l| {
            let scale = 1f64
                .max(cplx(l.b).norm())
                .max(cplx(l.a).norm() / dt);
            IdentityResidual {
                t: l.t,
                id: kind.ids().0.to_string(),
                degree: l.degree,
                residual: (cplx(l.da_dt) - cplx(l.rhs_a)).norm() / scale,
                scale,
            }
        })
        .collect()
}

/// `|dB/dt - rhs_B| / max(1, |rhs_B|, |B|/dt)` per ledger.
pub fn weak_residual_b(ledgers: &[WeakFormLedger], dt: f64, kind: WeakKind) -> Vec<IdentityResidual> {
    ledgers
        .iter()
        .map(|l| {
            let scale = 1f64
                .max(cplx(l.rhs_b).norm())
                .max(cplx(l.b).norm() / dt);
            IdentityResidual {
                t: l.t,
                id: kind.ids().1.to_string(),
                degree: l.degree,
                residual: (cplx(l.db_dt) - cplx(l.rhs_b)).norm() / scale,
                scale,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::PeriodicGrid;

    #[test]
    fn degree_zero_and_one_closed_forms() {
        let g = PeriodicGrid::new(64, 20.0, -10.0).unwrap();
        let eta = g.from_fn(|x| 0.05 * (-(x * x) / 4.0).exp());
        let q = g.from_fn(|x| 0.02 * x * (-(x * x) / 4.0).exp());
        let s = SurfaceState::new(0.0, eta.clone(), q).unwrap();
        let ext = crate::bulk::fit_extension(&s.eta, &s.q, 1.0, Default::default()).unwrap();
        let (a, b) = weak_form_ab(&s, &ext, 0).unwrap();
        assert!((a.re - eta.integrate()).abs() < 1e-15 && a.im == 0.0);
        assert_eq!(b, Complex64::new(0.0, 0.0));
        let (a, _) = weak_form_ab(&s, &ext, 1).unwrap();
        let want = (&eta * &eta).integrate() / 2.0;
        assert!((a.im - want).abs() < 1e-14, "{} vs {want}", a.im);
    }

    #[test]
    fn rest_series_has_zero_residuals() {
        let g = PeriodicGrid::new(32, 10.0, -5.0).unwrap();
        let s = SurfaceState::new(0.0, g.zeros(), g.zeros()).unwrap();
        let z = g.zeros();
        let ext = HarmonicExtension::zero(&g, 1.0);
        let f = Frame {
            state: &s,
            eta_t: &z,
            ext: &ext,
        };
        let p = PhysicalParams::default();
        for n in 0..=3 {
            let l = weak_form_ledgers(&[f, f, f], 0.1, n, WeakKind::Irrotational, &p, 1e-10).unwrap();
            assert!(weak_residual_a(&l, 0.1, WeakKind::Irrotational)[0].residual == 0.0);
            assert!(weak_residual_b(&l, 0.1, WeakKind::Irrotational)[0].residual == 0.0);
        }
        assert!(weak_form_ledgers(&[f, f], 0.1, 1, WeakKind::Vorticity, &p, 1e-10).is_err());
    }
}
