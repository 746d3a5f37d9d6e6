//! Uniform periodic grid and Fourier-spectral calculus on it.
//!
//! Transform convention: the forward FFT is unnormalised and the inverse
//! carries the `1/n` factor, so `F_k = sum_j f_j exp(-2 pi i j k / n)` and
//! `f_j = (1/n) sum_k F_k exp(2 pi i j k / n)`. Mode `k` has wavenumber
//! `2 pi m / L` with `m` the signed index (`m = k` for `k < n/2`,
//! `m = k - n` above). Node `j` sits at `x_min + j L / n`, so the basis
//! functions are `exp(i kappa (x - x_min))`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

struct GridInner {
    n_points: usize,
    length: f64,
    x_min: f64,
    wavenumbers: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// Uniform periodic grid with `n_points` nodes on `[x_min, x_min + length)`.
///
/// Cloning is cheap; FFT plans are shared.
#[derive(Clone)]
pub struct PeriodicGrid {
    inner: Arc<GridInner>,
}

impl fmt::Debug for PeriodicGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PeriodicGrid")
            .field("n_points", &self.inner.n_points)
            .field("length", &self.inner.length)
            .field("x_min", &self.inner.x_min)
            .finish()
    }
}

impl PartialEq for PeriodicGrid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.n_points == other.inner.n_points
                && self.inner.length == other.inner.length
                && self.inner.x_min == other.inner.x_min)
    }
}

impl PeriodicGrid {
    pub fn new(n_points: usize, length: f64, x_min: f64) -> Result<Self> {
        if n_points < 16 || !n_points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n_points must be a power of two >= 16, got {n_points}"
            )));
        }
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "length must be positive and finite, got {length}"
            )));
        }
        if !x_min.is_finite() || !(x_min + length).is_finite() {
            return Err(Error::InvalidGrid(format!("x_min must be finite, got {x_min}")));
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n_points);
        let inverse = planner.plan_fft_inverse(n_points);
        let base = 2.0 * std::f64::consts::PI / length;
        let wavenumbers = (0..n_points)
            .map(|k| base * signed_index(k, n_points) as f64)
            .collect();
        Ok(Self {
            inner: Arc::new(GridInner {
                n_points,
                length,
                x_min,
                wavenumbers,
                forward,
                inverse,
            }),
        })
    }

    pub fn n_points(&self) -> usize {
        self.inner.n_points
    }

    pub fn length(&self) -> f64 {
        self.inner.length
    }

    pub fn x_min(&self) -> f64 {
        self.inner.x_min
    }

    pub fn spacing(&self) -> f64 {
        self.inner.length / self.inner.n_points as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        self.inner.x_min + j as f64 * self.inner.length / self.inner.n_points as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_points()).map(|j| self.node(j)).collect()
    }

    /// Signed wavenumbers in FFT storage order.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.inner.wavenumbers
    }

    /// Highest signed mode index kept by [`RealField::dealias`].
    pub fn dealias_cutoff(&self) -> usize {
        self.n_points() / 3
    }

    pub fn forward(&self, samples: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.inner.forward.process(&mut buf);
        buf
    }

    /// Inverse transform including the `1/n` factor; imaginary parts dropped.
    pub fn inverse_real(&self, mut spectrum: Vec<Complex64>) -> Vec<f64> {
        self.inner.inverse.process(&mut spectrum);
        let scale = 1.0 / self.n_points() as f64;
        spectrum.into_iter().map(|c| c.re * scale).collect()
    }

    pub fn zeros(&self) -> RealField {
        RealField {
            grid: self.clone(),
            samples: vec![0.0; self.n_points()],
        }
    }

    pub fn constant(&self, value: f64) -> RealField {
        RealField {
            grid: self.clone(),
            samples: vec![value; self.n_points()],
        }
    }

    pub fn from_fn(&self, f: impl Fn(f64) -> f64) -> RealField {
        RealField {
            grid: self.clone(),
            samples: (0..self.n_points()).map(|j| f(self.node(j))).collect(),
        }
    }

    /// The coordinate itself as a field.
    pub fn x_field(&self) -> RealField {
        self.from_fn(|x| x)
    }

    /// Indices of the nodes within `fraction * L` of either end of the box.
    pub fn edge_indices(&self, fraction: f64) -> impl Iterator<Item = usize> + '_ {
        let band = fraction * self.length();
        let lo = self.x_min() + band;
        let hi = self.x_min() + self.length() - band;
        (0..self.n_points()).filter(move |&j| {
            let x = self.node(j);
            x < lo || x >= hi
        })
    }
}

pub(crate) fn signed_index(k: usize, n: usize) -> i64 {
    if k < n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// Real samples of a periodic function on a [`PeriodicGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct RealField {
    grid: PeriodicGrid,
    samples: Vec<f64>,
}

impl RealField {
    pub fn new(grid: &PeriodicGrid, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != grid.n_points() {
            return Err(Error::InvalidGrid(format!(
                "expected {} samples, got {}",
                grid.n_points(),
                samples.len()
            )));
        }
        if let Some(j) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid(format!("non-finite sample at node {j}")));
        }
        Ok(Self {
            grid: grid.clone(),
            samples,
        })
    }

    pub(crate) fn from_raw(grid: &PeriodicGrid, samples: Vec<f64>) -> Self {
        debug_assert_eq!(samples.len(), grid.n_points());
        Self {
            grid: grid.clone(),
            samples,
        }
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.samples.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        compensated_sum(self.samples.iter().copied()) / self.samples.len() as f64
    }

    pub fn same_grid(&self, other: &RealField) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> RealField {
        RealField::from_raw(&self.grid, self.samples.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &RealField, f: impl Fn(f64, f64) -> f64) -> RealField {
        debug_assert!(self.grid == other.grid);
        RealField::from_raw(
            &self.grid,
            self.samples
                .iter()
                .zip(&other.samples)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn scale(&self, c: f64) -> RealField {
        self.map(|v| c * v)
    }

    /// `self + c * other`
    pub fn axpy(&self, c: f64, other: &RealField) -> RealField {
        self.zip_map(other, |a, b| a + c * b)
    }

    pub fn spectrum(&self) -> Vec<Complex64> {
        self.grid.forward(&self.samples)
    }

    pub fn from_spectrum(grid: &PeriodicGrid, spectrum: Vec<Complex64>) -> RealField {
        RealField::from_raw(grid, grid.inverse_real(spectrum))
    }

    /// Multiply each Fourier mode by `symbol(kappa, k_index)`.
    pub fn apply_symbol(&self, symbol: impl Fn(f64, usize) -> Complex64) -> RealField {
        let mut spec = self.spectrum();
        for (k, (c, &kappa)) in spec.iter_mut().zip(self.grid.wavenumbers()).enumerate() {
            *c *= symbol(kappa, k);
        }
        RealField::from_spectrum(&self.grid, spec)
    }

    /// Spectral derivative of order 1, 2 or 3. The Nyquist mode is dropped
    /// for odd orders.
    pub fn derivative(&self, order: u32) -> Result<RealField> {
        if !(1..=3).contains(&order) {
            return Err(Error::UnsupportedOrder(order));
        }
        let nyquist = self.grid.n_points() / 2;
        Ok(self.apply_symbol(|kappa, k| {
            if order % 2 == 1 && k == nyquist {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, kappa).powu(order)
            }
        }))
    }

    pub(crate) fn dx(&self) -> RealField {
        self.derivative(1).expect("order 1 is supported")
    }

    /// Zero-mean periodic antiderivative. Fails when `|mean(f)|` exceeds
    /// `mean_tolerance * max|f|`.
    pub fn antiderivative(&self, mean_tolerance: f64) -> Result<RealField> {
        let mean = self.mean();
        let allowed = mean_tolerance * self.max_abs();
        if mean.abs() > allowed {
            return Err(Error::NonZeroMean { mean, allowed });
        }
        let nyquist = self.grid.n_points() / 2;
        Ok(self.apply_symbol(|kappa, k| {
            if k == 0 || k == nyquist {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, -1.0 / kappa)
            }
        }))
    }

    /// Antiderivative that vanishes at the left end of the box, i.e. the
    /// truncation of `int_{-inf}^x f` for data that decays toward the seam.
    pub fn antiderivative_from_seam(&self, mean_tolerance: f64) -> Result<RealField> {
        let f = self.antiderivative(mean_tolerance)?;
        let anchor = f.samples[0];
        Ok(f.map(|v| v - anchor))
    }

    /// 2/3-rule truncation: modes with `|m| > n/3` are zeroed.
    pub fn dealias(&self) -> RealField {
        let n = self.grid.n_points();
        let cutoff = self.grid.dealias_cutoff() as i64;
        self.apply_symbol(|_, k| {
            if signed_index(k, n).abs() > cutoff || k == n / 2 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(1.0, 0.0)
            }
        })
    }

    /// Integral over one period, `mean(f) * L`.
    pub fn integrate(&self) -> f64 {
        compensated_sum(self.samples.iter().copied()) * self.grid.spacing()
    }
}

/// Neumaier-compensated summation.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

macro_rules! field_binop {
    ($tr:ident, $method:ident, $op:tt) => {
        impl $tr<&RealField> for &RealField {
            type Output = RealField;
            fn $method(self, rhs: &RealField) -> RealField {
                assert!(self.grid == rhs.grid, "fields live on different grids");
                self.zip_map(rhs, |a, b| a $op b)
            }
        }
        impl $tr<RealField> for RealField {
            type Output = RealField;
            fn $method(self, rhs: RealField) -> RealField {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&RealField> for RealField {
            type Output = RealField;
            fn $method(self, rhs: &RealField) -> RealField {
                (&self).$method(rhs)
            }
        }
        impl $tr<f64> for &RealField {
            type Output = RealField;
            fn $method(self, rhs: f64) -> RealField {
                self.map(|a| a $op rhs)
            }
        }
        impl $tr<f64> for RealField {
            type Output = RealField;
            fn $method(self, rhs: f64) -> RealField {
                self.map(|a| a $op rhs)
            }
        }
    };
}

field_binop!(Add, add, +);
field_binop!(Sub, sub, -);
field_binop!(Mul, mul, *);

impl Neg for &RealField {
    type Output = RealField;
    fn neg(self) -> RealField {
        self.map(|a| -a)
    }
}

impl Neg for RealField {
    type Output = RealField;
    fn neg(self) -> RealField {
        self.map(|a| -a)
    }
}
