use crate::bulk::PhysicalParams;
use crate::dno::{to_canonical_with, Snapshot, SurfaceState};
use crate::error::Result;
use crate::grid::RealField;

/// Integrated densities at one observer time.
#[derive(Clone, Debug, PartialEq)]
pub struct DensitySample {
    pub t: f64,
    /// `T1..T8` of the irrotational table.
    pub irrotational: [f64; 8],
    /// `T1..T6, T8` of the constant-vorticity table.
    pub vorticity: Option<[f64; 7]>,
    pub hamiltonian: f64,
    /// `int q Gq/2 + omega eta eta_x q + omega^2 eta^3/6 + g eta^2/2`.
    pub vorticity_energy: f64,
}

fn tension_density(eta_x: &RealField, sigma: f64) -> RealField {
    eta_x.map(|e| sigma * ((1.0 + e * e).sqrt() - 1.0))
}

pub fn densities_irrotational(
    state: &SurfaceState,
    eta_t: &RealField,
    params: &PhysicalParams,
) -> [f64; 8] {
    let (t, g) = (state.t, params.g);
    let eta = &state.eta;
    let q = &state.q;
    let x = eta.grid().x_field();
    let ex = eta.dx();
    let n = eta.len();
    let (e, qs, xs, exs, ets) = (
        eta.samples(),
        q.samples(),
        x.samples(),
        ex.samples(),
        eta_t.samples(),
    );
    let st = tension_density(&ex, params.sigma);
    let sts = st.samples();
    let mut cols: Vec<Vec<f64>> = (0..8).map(|_| Vec::with_capacity(n)).collect();
    for j in 0..n {
        let (e, q, x, ex) = (e[j], qs[j], xs[j], exs[j]);
        let t2 = 0.5 * q * ets[j] + 0.5 * g * e * e + sts[j];
        cols[0].push(-ex * q);
        cols[1].push(t2);
        cols[2].push(e);
        cols[3].push(q + g * t * e);
        cols[4].push(x * e + t * ex * q);
        cols[5].push(0.5 * e * e - t * q - 0.5 * g * t * t * e);
        cols[6].push(
            q * (e - x * ex) - 4.0 * t * t2 + 3.5 * g * t * e * e - 3.5 * g * t * t * q
                - 7.0 / 6.0 * g * g * t * t * t * e,
        );
        cols[7].push((x + e * ex) * q + g * t * x * e + 0.5 * t * t * g * ex * q);
    }
    integrate_columns(eta, cols)
}

fn integrate_columns<const N: usize>(like: &RealField, cols: Vec<Vec<f64>>) -> [f64; N] {
    let mut out = [0.0; N];
    for (o, c) in out.iter_mut().zip(cols) {
        *o = RealField::from_raw(like.grid(), c).integrate();
    }
    out
}

/// Constant-vorticity densities, in the order `T1..T6, T8`.
pub fn densities_vorticity(
    state: &SurfaceState,
    eta_t: &RealField,
    params: &PhysicalParams,
) -> Result<[f64; 7]> {
    densities_vorticity_with(state, eta_t, params, 1e-10)
}

pub fn densities_vorticity_with(
    state: &SurfaceState,
    eta_t: &RealField,
    params: &PhysicalParams,
    mean_tolerance: f64,
) -> Result<[f64; 7]> {
    let (t, g, w) = (state.t, params.g, params.omega);
    let eta = &state.eta;
    let q = &state.q;
    let zeta = to_canonical_with(q, eta, w, mean_tolerance)?;
    let x = eta.grid().x_field();
    let ex = eta.dx();
    let st = tension_density(&ex, params.sigma);
    let n = eta.len();
    let mut cols: Vec<Vec<f64>> = (0..7).map(|_| Vec::with_capacity(n)).collect();
    for j in 0..n {
        let e = eta.samples()[j];
        let q = q.samples()[j];
        let z = zeta.samples()[j];
        let x = x.samples()[j];
        let ex = ex.samples()[j];
        let et = eta_t.samples()[j];
        cols[0].push(-ex * z);
        cols[1].push(
            0.5 * q * et + w * e * ex * q + w * w / 6.0 * e * e * e + 0.5 * g * e * e
                + st.samples()[j],
        );
        cols[2].push(e);
        cols[3].push(z + 0.5 * w * x * e + g * t * e + w * t * z * ex);
        cols[4].push(x * e + t * z * ex);
        cols[5].push(0.5 * e * e - t * z - 0.5 * g * t * t * e + 0.5 * w * x * t * e);
        cols[6].push(
            z * (x + e * ex) + x * g * t * e + 0.5 * g * t * t * ex * z - 0.25 * w * x * x * e
                + w / 12.0 * e * e * e,
        );
    }
    Ok(integrate_columns(eta, cols))
}

/// `int (q Gq + g eta^2)/2 + sigma (sqrt(1 + eta_x^2) - 1)`.
pub fn hamiltonian(state: &SurfaceState, gq: &RealField, params: &PhysicalParams) -> f64 {
    let eta = &state.eta;
    let ex = eta.dx();
    let st = tension_density(&ex, params.sigma);
    let g = params.g;
    let dens: Vec<f64> = (0..eta.len())
        .map(|j| {
            let e = eta.samples()[j];
            0.5 * (state.q.samples()[j] * gq.samples()[j] + g * e * e) + st.samples()[j]
        })
        .collect();
    RealField::from_raw(eta.grid(), dens).integrate()
}

/// Energy of the sheared flow written with `Gq` in place of `eta_t`.
pub fn vorticity_energy(state: &SurfaceState, gq: &RealField, params: &PhysicalParams) -> f64 {
    let eta = &state.eta;
    let ex = eta.dx();
    let st = tension_density(&ex, params.sigma);
    let (g, w) = (params.g, params.omega);
    let dens: Vec<f64> = (0..eta.len())
        .map(|j| {
            let e = eta.samples()[j];
            let q = state.q.samples()[j];
            0.5 * q * gq.samples()[j]
                + w * e * ex.samples()[j] * q
                + w * w / 6.0 * e * e * e
                + 0.5 * g * e * e
                + st.samples()[j]
        })
        .collect();
    RealField::from_raw(eta.grid(), dens).integrate()
}

/// All densities at a solver snapshot.
pub fn density_sample(
    snap: &Snapshot,
    params: &PhysicalParams,
    with_vorticity: bool,
    mean_tolerance: f64,
) -> Result<DensitySample> {
    let s = &snap.state;
    let vorticity = if with_vorticity {
        Some(densities_vorticity_with(s, &snap.rhs.eta_t, params, mean_tolerance)?)
    } else {
        None
    };
    Ok(DensitySample {
        t: s.t,
        irrotational: densities_irrotational(s, &snap.rhs.eta_t, params),
        vorticity,
        hamiltonian: hamiltonian(s, &snap.rhs.gq, params),
        vorticity_energy: vorticity_energy(s, &snap.rhs.gq, params),
    })
}
