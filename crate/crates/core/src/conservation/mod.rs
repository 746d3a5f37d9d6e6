//! Conserved densities, bottom fluxes, weak-form ledgers, contour integrals
//! and Green identities, plus the drift metric used to judge them.

mod contour;
mod densities;
mod flux;
mod weak;

pub use contour::{
    contour_integrals, green_identity_id, green_identity_residual, green_identity_residual_on,
    BoundaryTraces, GreenTest,
};
pub use densities::{
    densities_irrotational, densities_vorticity, densities_vorticity_with, density_sample,
    hamiltonian, vorticity_energy, DensitySample,
};
pub use flux::{bottom_flux_rates, BottomFlux, FluxIntegrator};
pub use weak::{
    vort_weak_form_ab, vort_weak_form_rhs_a, vort_weak_form_rhs_b, weak_form_ab,
    weak_form_ledgers, weak_form_rhs_a, weak_form_rhs_b, weak_residual_a, weak_residual_b, Frame,
    IdentityResidual, WeakFormLedger, WeakKind,
};

use crate::error::{Error, Result};

/// Floor on the denominator of a relative drift.
pub const DRIFT_FLOOR: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Drift {
    pub max_abs: f64,
    pub relative: f64,
}

/// Drift of one scalar series: `max |T(t) - T(0)|` and that over `max |T|`.
pub fn drift(series: &[f64]) -> Result<Drift> {
    let first = *series.first().ok_or(Error::InsufficientSeries { needed: 1, got: 0 })?;
    let max_abs = series.iter().fold(0.0f64, |m, v| m.max((v - first).abs()));
    let size = series.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(Drift {
        max_abs,
        relative: max_abs / size.max(DRIFT_FLOOR),
    })
}

/// Column-wise [`drift`] of a table of samples.
pub fn drift_report<const N: usize>(samples: &[[f64; N]]) -> Result<Vec<Drift>> {
    if samples.len() < 2 {
        return Err(Error::InsufficientSeries {
            needed: 2,
            got: samples.len(),
        });
    }
    (0..N)
        .map(|k| drift(&samples.iter().map(|s| s[k]).collect::<Vec<_>>()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn drift_examples() {
        assert_eq!(drift(&[3.0, 3.0, 3.0]).unwrap().max_abs, 0.0);
        let d = drift(&[0.0, 1e-9, -1e-9]).unwrap();
        assert_eq!(d.max_abs, 1e-9);
        assert_eq!(d.relative, 1.0);
        assert!(drift(&[]).is_err());
        assert!(drift_report::<2>(&[[1.0, 2.0]]).is_err());
        let r = drift_report(&[[1.0, 0.0], [1.5, 0.0]]).unwrap();
        assert_eq!(r[0].relative, 0.5 / 1.5);
        assert_eq!(r[1].relative, 0.0);
    }
}
