//! Bottom fluxes. On a finite-depth layer several of the tabulated densities
//! exchange momentum-like quantities with the bed; their surface integrals
//! then change at a rate set by the bottom trace `Q`. The balanced quantity
//! `int T - int_0^t rate` is what stays constant.

use crate::bulk::PhysicalParams;
use crate::error::{Error, Result};
use crate::grid::RealField;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BottomFlux {
    pub irrotational: [f64; 8],
    pub vorticity: [f64; 7],
}

impl BottomFlux {
    fn lincomb(terms: &[(f64, &BottomFlux)]) -> BottomFlux {
        let mut out = BottomFlux::default();
        for (c, f) in terms {
            for (o, v) in out.irrotational.iter_mut().zip(f.irrotational) {
                *o += c * v;
            }
            for (o, v) in out.vorticity.iter_mut().zip(f.vorticity) {
                *o += c * v;
            }
        }
        out
    }
}

/// Instantaneous rates `d/dt int T_k` produced by the bottom trace `Q` at time `t`.
pub fn bottom_flux_rates(t: f64, bottom: &RealField, params: &PhysicalParams) -> BottomFlux {
    let (g, h, w) = (params.g, params.h, params.omega);
    let qx = bottom.dx();
    let x = bottom.grid().x_field();
    let i_q = bottom.integrate();
    let i_qx2 = (&qx * &qx).integrate();
    let i_xqx2 = (&(&qx * &qx) * &x).integrate();
    let t4 = -0.5 * i_qx2;
    let t6 = -i_q + 0.5 * t * i_qx2;
    BottomFlux {
        irrotational: [
            0.0,
            0.0,
            0.0,
            t4,
            0.0,
            t6,
            0.5 * h * i_qx2 - 7.0 * g * t * i_q + 1.75 * g * t * t * i_qx2,
            -0.5 * i_xqx2,
        ],
        vorticity: [0.0, 0.0, 0.0, t4, 0.0, t6, -0.5 * i_xqx2 + w * h * i_q],
    }
}

/// Running time integral of [`BottomFlux`] sampled once per solver step.
#[derive(Clone, Debug)]
pub struct FluxIntegrator {
    dt: f64,
    rates: Vec<BottomFlux>,
}

impl FluxIntegrator {
    pub fn new(dt: f64) -> Self {
        Self {
            dt,
            rates: Vec::new(),
        }
    }

    /// Record the rate at the next step (the first call is step 0).
    pub fn push(&mut self, rate: BottomFlux) {
        self.rates.push(rate);
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    /// `int_0^{t_n} rate` by composite Simpson, with a third-order end
    /// panel when `n` is odd.
    pub fn integral(&self, n: usize) -> Result<BottomFlux> {
        if n >= self.rates.len() {
            return Err(Error::InsufficientSeries {
                needed: n + 1,
                got: self.rates.len(),
            });
        }
        let dt = self.dt;
        let r = &self.rates;
        if n == 0 {
            return Ok(BottomFlux::default());
        }
        if n == 1 {
            return Ok(BottomFlux::lincomb(&[(0.5 * dt, &r[0]), (0.5 * dt, &r[1])]));
        }
        let even = n - n % 2;
        let mut acc = BottomFlux::default();
        for i in (0..even).step_by(2) {
            acc = BottomFlux::lincomb(&[
                (1.0, &acc),
                (dt / 3.0, &r[i]),
                (4.0 * dt / 3.0, &r[i + 1]),
                (dt / 3.0, &r[i + 2]),
            ]);
        }
        if n % 2 == 1 {
            acc = BottomFlux::lincomb(&[
                (1.0, &acc),
                (5.0 * dt / 12.0, &r[n]),
                (8.0 * dt / 12.0, &r[n - 1]),
                (-dt / 12.0, &r[n - 2]),
            ]);
        }
        Ok(acc)
    }
}
