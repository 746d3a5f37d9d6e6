//! Harmonic polynomial test functions `phi_n = (x + i z)^n / n!`.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Highest degree enumerated by the audit engine.
pub const MAX_DEGREE: u32 = 3;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct HarmonicTestFunction {
    degree: u32,
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// `(x + i z)^m / m!`, zero for negative `m`.
fn monomial(m: i64, x: f64, z: f64) -> Complex64 {
    if m < 0 {
        return Complex64::new(0.0, 0.0);
    }
    let m = m as u32;
    Complex64::new(x, z).powu(m) / factorial(m)
}

impl HarmonicTestFunction {
    pub fn new(degree: u32) -> Result<Self> {
        if degree > MAX_DEGREE {
            return Err(Error::param("degree", format!("must be <= {MAX_DEGREE}, got {degree}")));
        }
        Ok(Self { degree })
    }

    pub fn all() -> impl Iterator<Item = HarmonicTestFunction> {
        (0..=MAX_DEGREE).map(|degree| HarmonicTestFunction { degree })
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    fn n(&self) -> i64 {
        self.degree as i64
    }

    pub fn eval(&self, x: f64, z: f64) -> Complex64 {
        monomial(self.n(), x, z)
    }

    /// `(phi_x, phi_z) = (phi_{n-1}, i phi_{n-1})`
    pub fn eval_gradient(&self, x: f64, z: f64) -> (Complex64, Complex64) {
        let p = monomial(self.n() - 1, x, z);
        (p, I * p)
    }

    /// `(phi_x, -phi_z)`
    pub fn eval_sigma3_gradient(&self, x: f64, z: f64) -> (Complex64, Complex64) {
        let (gx, gz) = self.eval_gradient(x, z);
        (gx, -gz)
    }

    /// `P` with `P_z = phi_n` and `P(x, 0) = 0`.
    pub fn eval_z_antiderivative(&self, x: f64, z: f64) -> Complex64 {
        // P = -i (phi_{n+1}(x, z) - phi_{n+1}(x, 0))
        let n1 = self.n() + 1;
        -I * (monomial(n1, x, z) - monomial(n1, x, 0.0))
    }

    /// `(phi_z, phi_zz, phi_zzz)`
    pub fn eval_z_derivatives(&self, x: f64, z: f64) -> (Complex64, Complex64, Complex64) {
        let n = self.n();
        (
            I * monomial(n - 1, x, z),
            -monomial(n - 2, x, z),
            -I * monomial(n - 3, x, z),
        )
    }
}
