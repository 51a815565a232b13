//! Periodic grid and exact spectral calculus: derivatives, quadrature,
//! norms, and the two-thirds dealiasing projection.
//!
//! All fields are real samples on a uniform periodic grid; transforms are
//! complex internally and never appear on the public surface. Norms carry
//! the continuum normalization (a factor of sqrt(spacing)) so that values
//! are comparable across resolutions.

use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{KdvError, Result};

/// Minimum sample count accepted by [`Grid::new`].
pub const MIN_SAMPLES: usize = 8;

struct GridInner {
    n: usize,
    length: f64,
    spacing: f64,
    /// Wavenumbers 2*pi*m/L in FFT layout: m = 0, 1, .., n/2, -(n/2-1), .., -1.
    /// The Nyquist entry is stored with positive sign; odd-order derivative
    /// multipliers zero it out (see [`Field::derivative`]).
    wavenumbers: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

/// Uniform periodic grid of `n` samples over `[0, length)`.
///
/// Cheap to clone (internally reference-counted) and immutable after
/// construction; safe to share across threads. Two grids are compatible
/// when `(n, length)` match, not when they are the same allocation.
#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

impl Grid {
    /// Build a grid with points x_j = j * length / n.
    ///
    /// `n` must be even and at least [`MIN_SAMPLES`]; powers of two give the
    /// fastest transforms. `length` must be positive and finite.
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if !n.is_multiple_of(2) {
            return Err(KdvError::InvalidGrid(format!("n = {n} must be even")));
        }
        if n < MIN_SAMPLES {
            return Err(KdvError::InvalidGrid(format!(
                "n = {n} below minimum {MIN_SAMPLES}"
            )));
        }
        if !(length > 0.0) || !length.is_finite() {
            return Err(KdvError::InvalidGrid(format!(
                "length = {length} must be positive and finite"
            )));
        }
        let base = 2.0 * std::f64::consts::PI / length;
        let wavenumbers = (0..n)
            .map(|j| {
                let m = if j <= n / 2 {
                    j as f64
                } else {
                    j as f64 - n as f64
                };
                m * base
            })
            .collect();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        Ok(Grid {
            inner: Arc::new(GridInner {
                n,
                length,
                spacing: length / n as f64,
                wavenumbers,
                fwd,
                inv,
            }),
        })
    }

    pub fn n(&self) -> usize {
        self.inner.n
    }

    pub fn length(&self) -> f64 {
        self.inner.length
    }

    pub fn spacing(&self) -> f64 {
        self.inner.spacing
    }

    /// Wavenumber table in FFT layout (positive Nyquist).
    pub fn wavenumbers(&self) -> &[f64] {
        &self.inner.wavenumbers
    }

    pub fn point(&self, j: usize) -> f64 {
        j as f64 * self.inner.spacing
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n()).map(move |j| self.point(j))
    }

    /// Spectral index magnitude |m| of FFT slot `j`.
    fn mode_index(&self, j: usize) -> usize {
        let n = self.inner.n;
        if j <= n / 2 {
            j
        } else {
            n - j
        }
    }

    pub(crate) fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.inner.fwd.process(&mut buf);
        buf
    }

    pub(crate) fn inverse_real(&self, mut modes: Vec<Complex64>) -> Vec<f64> {
        self.inner.inv.process(&mut modes);
        let scale = 1.0 / self.inner.n as f64;
        modes.iter().map(|c| c.re * scale).collect()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.inner.n == other.inner.n && self.inner.length == other.inner.length
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n", &self.inner.n)
            .field("length", &self.inner.length)
            .finish()
    }
}

/// L2 (continuum-normalized) and Linf norms of a field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub l2: f64,
    pub linf: f64,
}

/// Real samples of a function of x on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: &Grid) -> Self {
        Field {
            grid: grid.clone(),
            values: vec![0.0; grid.n()],
        }
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        Field {
            grid: grid.clone(),
            values: vec![c; grid.n()],
        }
    }

    /// Sample `f(x)` at the grid points. The closure's values are taken as
    /// given; consumers of the field check finiteness on entry.
    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> f64) -> Self {
        Field {
            grid: grid.clone(),
            values: grid.points().map(f).collect(),
        }
    }

    /// Wrap explicit samples; rejects length mismatch and non-finite entries.
    pub fn from_values(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(KdvError::InvalidGrid(format!(
                "value count {} does not match grid n = {}",
                values.len(),
                grid.n()
            )));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(KdvError::NonFinite("field samples".into()));
        }
        Ok(Field {
            grid: grid.clone(),
            values,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination of two fields on the same grid.
    ///
    /// Panics on grid mismatch; combining fields from different grids is a
    /// programming error, not a runtime condition.
    pub fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Field {
        assert_eq!(
            self.grid, other.grid,
            "fields combine only on identical grids"
        );
        Field {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn add(&self, other: &Field) -> Field {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Field {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Field) -> Field {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scale(&self, s: f64) -> Field {
        self.map(|v| s * v)
    }

    pub fn shift(&self, c: f64) -> Field {
        self.map(|v| v + c)
    }

    /// Spectral derivative of the given order (1..=6).
    ///
    /// Mode m is multiplied by (i k_m)^order. For odd orders the Nyquist
    /// multiplier is set to zero, the standard choice that keeps the
    /// derivative of a real field real.
    pub fn derivative(&self, order: usize) -> Result<Field> {
        if !(1..=6).contains(&order) {
            return Err(KdvError::UnsupportedOrder(order));
        }
        let n = self.grid.n();
        let mut modes = self.grid.forward(&self.values);
        let odd = order % 2 == 1;
        for (j, m) in modes.iter_mut().enumerate() {
            if odd && j == n / 2 {
                *m = Complex64::new(0.0, 0.0);
                continue;
            }
            let k = self.grid.wavenumbers()[j];
            let mult = Complex64::new(0.0, k).powu(order as u32);
            *m *= mult;
        }
        Ok(Field {
            grid: self.grid.clone(),
            values: self.grid.inverse_real(modes),
        })
    }

    /// Zero every mode with |m| > n/3 (two-thirds rule).
    pub fn dealias(&self) -> Field {
        let n = self.grid.n();
        let cutoff = n as f64 / 3.0;
        let mut modes = self.grid.forward(&self.values);
        for (j, m) in modes.iter_mut().enumerate() {
            if self.grid.mode_index(j) as f64 > cutoff {
                *m = Complex64::new(0.0, 0.0);
            }
        }
        Field {
            grid: self.grid.clone(),
            values: self.grid.inverse_real(modes),
        }
    }

    /// Periodic quadrature: length * mean(values). Exact for trigonometric
    /// polynomials resolved on the grid.
    pub fn integral(&self) -> f64 {
        let sum: f64 = self.values.iter().sum();
        self.grid.length() * sum / self.grid.n() as f64
    }

    /// Continuum-normalized L2 norm and the max norm.
    pub fn norms(&self) -> Norms {
        let n = self.grid.n() as f64;
        let sumsq: f64 = self.values.iter().map(|v| v * v).sum();
        let linf = self.values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        Norms {
            l2: (self.grid.length() * sumsq / n).sqrt(),
            linf,
        }
    }

    pub fn l2(&self) -> f64 {
        self.norms().l2
    }

    pub fn linf(&self) -> f64 {
        self.norms().linf
    }

    /// Discrete H^k norm: sqrt(sum_{j=0..k} ||d^j f/dx^j||_L2^2) with
    /// spectral derivatives. `k` up to 6.
    pub fn sobolev_norm(&self, k: usize) -> Result<f64> {
        if k > 6 {
            return Err(KdvError::UnsupportedSobolevIndex(k));
        }
        let mut total = self.l2().powi(2);
        for j in 1..=k {
            total += self.derivative(j)?.l2().powi(2);
        }
        Ok(total.sqrt())
    }
}
